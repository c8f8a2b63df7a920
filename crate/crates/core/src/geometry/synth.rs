use std::collections::HashMap;

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::Vec3;

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

/// Icosphere centred at the origin with outward-facing winding:
/// `20 * 4^subdivisions` faces, every vertex exactly on the sphere.
pub fn synth_sphere(radius: f64, subdivisions: u32) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces = ICOSAHEDRON_FACES.to_vec();

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let vertices = vertices
        .into_iter()
        .map(|v| v * (radius / v.norm()))
        .collect();
    Mesh::new(vertices, faces).expect("icosphere connectivity is valid")
}

/// Icosphere of unit radius scaled by the three semi-axes.
pub fn synth_ellipsoid(semi_axes: Vec3, subdivisions: u32) -> Mesh {
    let sphere = synth_sphere(1.0, subdivisions);
    let vertices = sphere
        .vertices()
        .iter()
        .map(|v| v.component_mul(&semi_axes))
        .collect();
    sphere
        .with_vertices(vertices)
        .expect("scaling keeps connectivity valid")
}

/// Infinite cylinder given by a point on its axis, an axis direction and a radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub axis_point: Vec3,
    pub axis_dir: Vec3,
    pub radius: f64,
}

impl Cylinder {
    pub fn new(axis_point: Vec3, axis_dir: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cylinder radius must be positive, got {radius}"
            )));
        }
        let n = axis_dir.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidConfig(
                "cylinder axis direction is zero".into(),
            ));
        }
        Ok(Cylinder {
            axis_point,
            axis_dir: axis_dir / n,
            radius,
        })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let d = p - self.axis_point;
        let radial = d - self.axis_dir * d.dot(&self.axis_dir);
        radial.norm_squared() <= self.radius * self.radius
    }
}

/// Indices of faces whose three corners all lie inside the cylinder.
pub fn cylinder_face_mask(mesh: &Mesh, cylinder: &Cylinder) -> Vec<usize> {
    let inside: Vec<bool> = mesh
        .vertices()
        .iter()
        .map(|v| cylinder.contains(v))
        .collect();
    mesh.faces()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.iter().all(|&k| inside[k]))
        .map(|(i, _)| i)
        .collect()
}

/// Field-of-view cut: keeps whole faces lying inside the cylinder, drops the
/// rest along with vertices nothing references any more.
pub fn truncate_by_cylinder(
    mesh: &Mesh,
    axis_point: Vec3,
    axis_dir: Vec3,
    radius: f64,
) -> Result<Mesh> {
    let cylinder = Cylinder::new(axis_point, axis_dir, radius)?;
    let keep = cylinder_face_mask(mesh, &cylinder);
    if keep.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    mesh.subset_faces(&keep)
}

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Vec3;

/// Triangle mesh with millimetre coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Builds a mesh, checking index ranges, distinct face corners and finite coordinates.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
        }
        for (f, face) in faces.iter().enumerate() {
            if let Some(&bad) = face.iter().find(|&&k| k >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {f} references vertex {bad} but the mesh has {} vertices",
                    vertices.len()
                )));
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {f} repeats a vertex: {face:?}"
                )));
            }
        }
        Ok(Mesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Same connectivity, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::CountMismatch {
                expected: self.vertices.len(),
                found: vertices.len(),
            });
        }
        Mesh::new(vertices, self.faces.clone())
    }

    pub fn face_corners(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Half the cross product of the two edges leaving the first corner.
    pub fn face_normal_vector(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_corners(f);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_normal_vector(f).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Axis-aligned bounding box `(min, max)`; `None` for a vertex-free mesh.
    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        bounding_box(&self.vertices)
    }

    /// Indices of faces whose area falls below `threshold`.
    pub fn degenerate_faces(&self, threshold: f64) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| self.face_area(f) < threshold)
            .collect()
    }

    /// Keeps the listed faces and drops vertices no kept face references.
    /// Surviving vertices keep their relative order.
    pub fn subset_faces(&self, keep: &[usize]) -> Result<Self> {
        let mut used = vec![false; self.vertices.len()];
        for &f in keep {
            for &v in &self.faces[f] {
                used[v] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                remap[i] = vertices.len();
                vertices.push(self.vertices[i]);
            }
        }
        let faces = keep
            .iter()
            .map(|&f| {
                let [a, b, c] = self.faces[f];
                [remap[a], remap[b], remap[c]]
            })
            .collect();
        Mesh::new(vertices, faces)
    }

    /// Pairs of faces sharing an edge traversed in the same direction by both,
    /// i.e. whose windings (and therefore normals) disagree.
    pub fn inconsistent_orientations(&self) -> Vec<(usize, usize)> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut bad = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let edge = (face[k], face[(k + 1) % 3]);
                if let Some(&other) = directed.get(&edge) {
                    bad.push((other, f));
                } else {
                    directed.insert(edge, f);
                }
            }
        }
        bad.sort_unstable();
        bad.dedup();
        bad
    }
}

pub(crate) fn bounding_box(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    Some(
        points
            .iter()
            .fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
    )
}

/// Polyline made of straight segments. Planar curves are stored with `z = 0`
/// and `dim == 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Vec3>,
    segments: Vec<[usize; 2]>,
    dim: usize,
}

impl Polyline {
    pub fn new(vertices: Vec<Vec3>, segments: Vec<[usize; 2]>) -> Result<Self> {
        Self::with_dim(vertices, segments, 3)
    }

    pub fn new_planar(vertices: Vec<Vec3>, segments: Vec<[usize; 2]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|v| v.z != 0.0) {
            return Err(Error::InvalidPolyline(format!(
                "planar polyline vertex {i} has nonzero z"
            )));
        }
        Self::with_dim(vertices, segments, 2)
    }

    fn with_dim(vertices: Vec<Vec3>, segments: Vec<[usize; 2]>, dim: usize) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidPolyline(format!("vertex {i} is not finite")));
            }
        }
        for (s, seg) in segments.iter().enumerate() {
            if seg.iter().any(|&k| k >= vertices.len()) {
                return Err(Error::InvalidPolyline(format!(
                    "segment {s} index out of range: {seg:?}"
                )));
            }
            if seg[0] == seg[1] {
                return Err(Error::InvalidPolyline(format!(
                    "segment {s} has identical endpoints"
                )));
            }
        }
        Ok(Polyline {
            vertices,
            segments,
            dim,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn segments(&self) -> &[[usize; 2]] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_length(&self) -> f64 {
        self.segments
            .iter()
            .map(|&[a, b]| (self.vertices[b] - self.vertices[a]).norm())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn rejects_bad_faces() {
        assert!(Mesh::new(tri(), vec![[0, 1, 5]]).is_err());
        assert!(Mesh::new(tri(), vec![[0, 1, 1]]).is_err());
        let mut v = tri();
        v[2].x = f64::NAN;
        assert!(Mesh::new(v, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn subset_compacts_vertices() {
        let mut v = tri();
        v.push(Vec3::new(1.0, 1.0, 0.0));
        let m = Mesh::new(v, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        let s = m.subset_faces(&[1]).unwrap();
        assert_eq!(s.num_vertices(), 3);
        assert_eq!(s.face_corners(0), m.face_corners(1));
    }

    #[test]
    fn detects_flipped_neighbor() {
        let mut v = tri();
        v.push(Vec3::new(1.0, 1.0, 0.0));
        let ok = Mesh::new(v.clone(), vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        assert!(ok.inconsistent_orientations().is_empty());
        let flipped = Mesh::new(v, vec![[0, 1, 2], [1, 2, 3]]).unwrap();
        assert_eq!(flipped.inconsistent_orientations(), vec![(0, 1)]);
    }

    #[test]
    fn polyline_validation() {
        let v = tri();
        assert!(Polyline::new(v.clone(), vec![[0, 0]]).is_err());
        assert!(Polyline::new(v.clone(), vec![[0, 3]]).is_err());
        let p = Polyline::new_planar(v, vec![[0, 1], [1, 2]]).unwrap();
        assert_eq!(p.dim(), 2);
        assert!((p.total_length() - (1.0 + 2f64.sqrt())).abs() < 1e-15);
    }
}

use rayon::prelude::*;

use super::mesh::{Mesh, Polyline};
use crate::error::{Error, Result};
use crate::Vec3;

/// Faces with area below this are rejected (mm²).
pub const DEGENERATE_AREA: f64 = 1e-12;

const UNIT_TOLERANCE: f64 = 1e-12;

/// A shape sampled as weighted oriented elements: one `(center, director, weight)`
/// triple per face or segment. Directors are unit normals for surfaces and unit
/// tangents for curves; weights are areas or lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVarifold {
    centers: Vec<Vec3>,
    directors: Vec<Vec3>,
    weights: Vec<f64>,
}

impl DiscreteVarifold {
    pub fn new(centers: Vec<Vec3>, directors: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if centers.len() != directors.len() || centers.len() != weights.len() {
            return Err(Error::InvalidVarifold(format!(
                "length mismatch: {} centers, {} directors, {} weights",
                centers.len(),
                directors.len(),
                weights.len()
            )));
        }
        for (i, d) in directors.iter().enumerate() {
            if (d.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::InvalidVarifold(format!(
                    "director {i} has norm {}",
                    d.norm()
                )));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidVarifold(format!("weight {i} is {w}")));
            }
        }
        if centers.iter().any(|c| !c.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidVarifold("non-finite center".into()));
        }
        Ok(DiscreteVarifold {
            centers,
            directors,
            weights,
        })
    }

    /// Builds elements from raw direction vectors, normalizing them.
    pub fn from_directions(
        centers: Vec<Vec3>,
        directions: Vec<Vec3>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let directors = directions
            .into_iter()
            .map(|d| {
                let n = d.norm();
                if n > 0.0 {
                    d / n
                } else {
                    d
                }
            })
            .collect();
        Self::new(centers, directors, weights)
    }

    /// No validation. Used to probe functionals off the unit sphere (e.g. finite
    /// differences with respect to un-normalized directors).
    pub fn from_parts_unchecked(
        centers: Vec<Vec3>,
        directors: Vec<Vec3>,
        weights: Vec<f64>,
    ) -> Self {
        DiscreteVarifold {
            centers,
            directors,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn directors(&self) -> &[Vec3] {
        &self.directors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weight-weighted mean of the centers.
    pub fn barycenter(&self) -> Vec3 {
        let total = self.total_weight();
        self.centers
            .iter()
            .zip(&self.weights)
            .fold(Vec3::zeros(), |acc, (c, &w)| acc + c * w)
            / total
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        DiscreteVarifold {
            centers: self.centers.iter().map(|c| c + t).collect(),
            directors: self.directors.clone(),
            weights: self.weights.clone(),
        }
    }

    pub fn into_parts(self) -> (Vec<Vec3>, Vec<Vec3>, Vec<f64>) {
        (self.centers, self.directors, self.weights)
    }
}

/// Gradient of a scalar functional with respect to every element's center,
/// director (treated as a free vector) and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGradient {
    pub centers: Vec<Vec3>,
    pub directors: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl ElementGradient {
    pub fn zeros(n: usize) -> Self {
        ElementGradient {
            centers: vec![Vec3::zeros(); n],
            directors: vec![Vec3::zeros(); n],
            weights: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn add_scaled(&mut self, other: &ElementGradient, scale: f64) {
        for (a, b) in self.centers.iter_mut().zip(&other.centers) {
            *a += b * scale;
        }
        for (a, b) in self.directors.iter_mut().zip(&other.directors) {
            *a += b * scale;
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b * scale;
        }
    }
}

/// One element per face: centroid, unit normal from the face winding, area.
pub fn face_elements(mesh: &Mesh) -> Result<DiscreteVarifold> {
    let per_face: Vec<(Vec3, Vec3, f64)> = (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| {
            let [a, b, c] = mesh.face_corners(f);
            let eta = 0.5 * (b - a).cross(&(c - a));
            let area = eta.norm();
            if !(area >= DEGENERATE_AREA) {
                return Err(Error::DegenerateFace { index: f, area });
            }
            Ok(((a + b + c) / 3.0, eta / area, area))
        })
        .collect::<Result<_>>()?;
    let mut centers = Vec::with_capacity(per_face.len());
    let mut directors = Vec::with_capacity(per_face.len());
    let mut weights = Vec::with_capacity(per_face.len());
    for (c, d, w) in per_face {
        centers.push(c);
        directors.push(d);
        weights.push(w);
    }
    Ok(DiscreteVarifold {
        centers,
        directors,
        weights,
    })
}

/// Pulls an element gradient back onto the mesh vertices through the centroid,
/// unit-normal and area maps of each face.
pub fn face_elements_backward(mesh: &Mesh, grad: &ElementGradient) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); mesh.num_vertices()];
    for (f, &[ia, ib, ic]) in mesh.faces().iter().enumerate() {
        let [a, b, c] = mesh.face_corners(f);
        let e1 = b - a;
        let e2 = c - a;
        let eta = 0.5 * e1.cross(&e2);
        let area = eta.norm();
        let tau = eta / area;
        let g_tau = grad.directors[f];
        // d(eta/|eta|) = (I - tau tau^T)/|eta|, d|eta| = tau
        let g_eta = (g_tau - tau * tau.dot(&g_tau)) / area + tau * grad.weights[f];
        let g_e1 = 0.5 * e2.cross(&g_eta);
        let g_e2 = 0.5 * g_eta.cross(&e1);
        let g_c = grad.centers[f] / 3.0;
        out[ia] += g_c - g_e1 - g_e2;
        out[ib] += g_c + g_e1;
        out[ic] += g_c + g_e2;
    }
    out
}

/// One element per segment: midpoint, unit tangent (endpoint order), length.
pub fn segment_elements(polyline: &Polyline) -> Result<DiscreteVarifold> {
    let v = polyline.vertices();
    let mut centers = Vec::with_capacity(polyline.segments().len());
    let mut directors = Vec::with_capacity(polyline.segments().len());
    let mut weights = Vec::with_capacity(polyline.segments().len());
    for (s, &[a, b]) in polyline.segments().iter().enumerate() {
        let d = v[b] - v[a];
        let len = d.norm();
        if len == 0.0 {
            return Err(Error::DegenerateSegment { index: s });
        }
        centers.push((v[a] + v[b]) * 0.5);
        directors.push(d / len);
        weights.push(len);
    }
    Ok(DiscreteVarifold {
        centers,
        directors,
        weights,
    })
}

/// Translation moving the source's weighted barycenter onto the target's.
pub fn barycenter_translation(source: &DiscreteVarifold, target: &DiscreteVarifold) -> Vec3 {
    target.barycenter() - source.barycenter()
}

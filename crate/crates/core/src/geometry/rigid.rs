use serde::{Deserialize, Serialize};

use super::elements::DiscreteVarifold;
use super::mesh::{Mesh, Polyline};
use crate::{Mat3, Vec3};

/// Rotation given by intrinsic X-Y-Z Euler angles in degrees, followed by a
/// translation in mm: `x -> Rx(a) Ry(b) Rz(c) x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub euler_deg: [f64; 3],
    pub translation: [f64; 3],
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn drot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn drot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn drot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Rotation matrix for intrinsic XYZ angles in radians.
pub fn euler_xyz_matrix(rad: [f64; 3]) -> Mat3 {
    rot_x(rad[0]) * rot_y(rad[1]) * rot_z(rad[2])
}

/// Partial derivatives of [`euler_xyz_matrix`] with respect to each angle (radians).
pub fn euler_xyz_jacobian(rad: [f64; 3]) -> [Mat3; 3] {
    let (x, y, z) = (rot_x(rad[0]), rot_y(rad[1]), rot_z(rad[2]));
    [
        drot_x(rad[0]) * y * z,
        x * drot_y(rad[1]) * z,
        x * y * drot_z(rad[2]),
    ]
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            euler_deg: [0.0; 3],
            translation: [0.0; 3],
        }
    }

    pub fn new(euler_deg: [f64; 3], translation: Vec3) -> Self {
        RigidTransform {
            euler_deg,
            translation: translation.into(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new([0.0; 3], t)
    }

    pub fn translation_vector(&self) -> Vec3 {
        Vec3::from(self.translation)
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        euler_xyz_matrix(self.euler_deg.map(f64::to_radians))
    }

    /// Recovers XYZ Euler angles from a proper rotation matrix. At gimbal lock
    /// (|R[0,2]| = 1) the third angle is set to zero.
    pub fn from_matrix(rotation: &Mat3, translation: Vec3) -> Self {
        let sb = rotation[(0, 2)].clamp(-1.0, 1.0);
        let b = sb.asin();
        let (a, c) = if sb.abs() < 1.0 - 1e-12 {
            (
                (-rotation[(1, 2)]).atan2(rotation[(2, 2)]),
                (-rotation[(0, 1)]).atan2(rotation[(0, 0)]),
            )
        } else {
            (rotation[(2, 1)].atan2(rotation[(1, 1)]), 0.0)
        };
        RigidTransform {
            euler_deg: [a.to_degrees(), b.to_degrees(), c.to_degrees()],
            translation: translation.into(),
        }
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation_matrix() * p + self.translation_vector()
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &RigidTransform) -> RigidTransform {
        let r2 = self.rotation_matrix();
        let r1 = first.rotation_matrix();
        RigidTransform::from_matrix(
            &(r2 * r1),
            r2 * first.translation_vector() + self.translation_vector(),
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation_matrix().transpose();
        RigidTransform::from_matrix(&rt, -(rt * self.translation_vector()))
    }

    pub fn max_abs_angle(&self) -> f64 {
        self.euler_deg.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

/// Shapes that can be moved by a rigid transform.
pub trait RigidMotion: Sized {
    fn transformed(&self, transform: &RigidTransform) -> Self;
}

impl RigidMotion for Mesh {
    fn transformed(&self, transform: &RigidTransform) -> Self {
        let r = transform.rotation_matrix();
        let t = transform.translation_vector();
        let vertices = self.vertices().iter().map(|v| r * v + t).collect();
        self.with_vertices(vertices)
            .expect("rigid motion keeps connectivity valid")
    }
}

impl RigidMotion for Polyline {
    fn transformed(&self, transform: &RigidTransform) -> Self {
        let r = transform.rotation_matrix();
        let t = transform.translation_vector();
        let vertices = self.vertices().iter().map(|v| r * v + t).collect();
        Polyline::new(vertices, self.segments().to_vec())
            .expect("rigid motion keeps polyline valid")
    }
}

impl RigidMotion for DiscreteVarifold {
    fn transformed(&self, transform: &RigidTransform) -> Self {
        let r = transform.rotation_matrix();
        let t = transform.translation_vector();
        DiscreteVarifold::from_parts_unchecked(
            self.centers().iter().map(|c| r * c + t).collect(),
            self.directors().iter().map(|d| r * d).collect(),
            self.weights().to_vec(),
        )
    }
}

impl RigidMotion for Vec<Vec3> {
    fn transformed(&self, transform: &RigidTransform) -> Self {
        let r = transform.rotation_matrix();
        let t = transform.translation_vector();
        self.iter().map(|p| r * p + t).collect()
    }
}

/// Rotates positions (vertices or centers) and directors, translates positions,
/// keeps weights.
pub fn apply_rigid<S: RigidMotion>(transform: &RigidTransform, shape: &S) -> S {
    shape.transformed(transform)
}

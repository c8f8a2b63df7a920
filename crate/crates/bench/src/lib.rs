//! Fixtures shared by the benchmarks.

use varimatch::deformation::{DeformationKernel, ShootingState};
use varimatch::geometry::{face_elements, synth_sphere, truncate_by_cylinder, Mesh};
use varimatch::{DiscreteVarifold, Vec3};

/// Truncated sphere (source) and full sphere (target) of radius 10 mm.
pub fn sphere_pair(subdivisions: u32) -> (Mesh, Mesh) {
    let target = synth_sphere(10.0, subdivisions);
    let source = truncate_by_cylinder(&target, Vec3::new(4.0, 0.0, 0.0), Vec3::z(), 6.0)
        .expect("cylinder keeps faces");
    (source, target)
}

pub fn elements(mesh: &Mesh) -> DiscreteVarifold {
    face_elements(mesh).expect("valid mesh")
}

/// Control points on the mesh vertices with a smooth, deterministic momentum field.
pub fn swirl_state(mesh: &Mesh) -> ShootingState {
    let q = mesh.vertices().to_vec();
    let p = q
        .iter()
        .map(|v| Vec3::new(-v.y, v.x, 0.3 * v.z) * 0.002)
        .collect();
    ShootingState::new(q, p).expect("finite state")
}

pub fn kernel() -> DeformationKernel {
    DeformationKernel::with_default_scales(8.0).expect("positive width")
}

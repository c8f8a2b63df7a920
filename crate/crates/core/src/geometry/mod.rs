//! Shape containers, mesh/polyline I/O, element construction and rigid motions.

mod elements;
mod io;
mod mesh;
mod rigid;
mod synth;

pub use elements::{
    barycenter_translation, face_elements, face_elements_backward, segment_elements,
    DiscreteVarifold, ElementGradient, DEGENERATE_AREA,
};
pub use io::{
    load_mesh, load_polyline_csv, mesh_to_string, save_mesh, save_polyline_csv, MeshFormat,
};
pub(crate) use mesh::bounding_box;
pub use mesh::{Mesh, Polyline};
pub use rigid::{apply_rigid, euler_xyz_jacobian, euler_xyz_matrix, RigidMotion, RigidTransform};
pub use synth::{
    cylinder_face_mask, synth_ellipsoid, synth_sphere, truncate_by_cylinder, Cylinder,
};

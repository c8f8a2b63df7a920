//! Partial, asymmetric registration of surfaces and curves.
//!
//! Shapes are sampled as weighted oriented elements ([`DiscreteVarifold`]) and
//! compared with a normalized partial matching term that vanishes when the
//! source sits inside the target. Rigid and LDDMM (geodesic shooting)
//! registrations minimise that term, optionally with a mass-preservation
//! penalty, and their deformations extend to arbitrary points and voxel grids.
//!
//! ```
//! use varimatch::geometry::{face_elements, synth_sphere, truncate_by_cylinder};
//! use varimatch::varifold::{partial_dissimilarity, VarifoldKernelConfig};
//! use varimatch::Vec3;
//!
//! let sphere = synth_sphere(10.0, 3);
//! let cut = truncate_by_cylinder(&sphere, Vec3::zeros(), Vec3::z(), 6.0).unwrap();
//! let (s, t) = (face_elements(&cut).unwrap(), face_elements(&sphere).unwrap());
//! let cfg = VarifoldKernelConfig::new(2.0, 1e-6).unwrap();
//! let inside = partial_dissimilarity(&s, &t, &cfg).unwrap();
//! let far = partial_dissimilarity(&s, &t.translated(&Vec3::new(100.0, 0.0, 0.0)), &cfg).unwrap();
//! assert!(inside < 0.01 * far);
//! ```

// Negated comparisons deliberately treat NaN as invalid input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deformation;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod map;
pub mod registration;
pub mod varifold;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use error::{Error, Result};
pub use geometry::{DiscreteVarifold, Mesh, Polyline, RigidTransform};

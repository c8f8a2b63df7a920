//! Oriented-varifold kernels, representer sums, the normalized partial
//! matching dissimilarity, the ICP point dissimilarity and the
//! mass-preservation regularizers.
//!
//! All outer sums run in parallel over elements and are reduced sequentially,
//! so results are bit-identical from run to run.

mod icp;
mod kernels;
mod neighbors;
mod partial;
mod regularizers;
mod representer;
#[cfg(test)]
pub(crate) mod test_support;

pub use icp::{icp_dissimilarity, nearest_neighbors};
pub use kernels::{
    hinge_sq, orientation_kernel, smooth_min_one, spatial_kernel, VarifoldKernelConfig,
    DEFAULT_EPSILON,
};
pub use partial::{partial_dissimilarity, PartialEvaluation, PartialMatching, OMEGA_FLOOR};
pub use regularizers::{regularizer_global, regularizer_local, MassRegularizer, RegularizerKind};
pub use representer::{distance_sq, inner_product, representer_values};

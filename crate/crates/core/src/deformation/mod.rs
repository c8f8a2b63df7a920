//! Geodesic shooting in the LDDMM setting: a sum-of-Gaussians kernel, RK4
//! integration of the Hamiltonian system on control points and momenta, its
//! discrete adjoint, and transport of meshes, points and grids along the flow.

mod flow;
mod kernel;
mod shooting;

pub use flow::{
    deform_grid, deform_mesh, flow_points, flow_points_along, DisplacementField, GridSpec,
    DEFAULT_GRID_NODE_CAP,
};
pub use kernel::{kv_scalar, DeformationKernel, DEFAULT_SCALE_DIVISORS};
pub(crate) use shooting::{flatten, path_energy_momentum_gradient, unflatten};
pub use shooting::{
    hamiltonian, path_energy, shoot, shoot_backward, shoot_interval, FlowTrajectory, ShootingState,
};

//! Registration drivers: an L-BFGS optimizer, rigid and translation stages,
//! the ICP baseline, multi-scale LDDMM with partial matching and mass
//! regularization, and pipelines chaining them.

mod config;
mod gradcheck;
mod lbfgs;
mod lddmm;
mod pipeline;
mod report;
mod rigid;

pub use config::{IcpOptions, RegistrationConfig};
pub use gradcheck::{gradient_check, GradientCheckReport};
pub use lbfgs::{lbfgs_minimize, IterRecord, LbfgsOptions, LbfgsOutcome, Termination};
pub use lddmm::{register_lddmm, resolve_sigma0, LddmmObjective, LddmmOutcome};
pub use pipeline::{pipeline, Method, RegistrationResult};
pub use report::{ObjectiveBreakdown, StageReport, TraceEntry};
pub use rigid::{
    register_icp_rigid, register_rigid_partial, register_translation, RigidObjective, RigidOutcome,
};

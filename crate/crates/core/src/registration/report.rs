use serde::{Deserialize, Serialize};

use super::lbfgs::{LbfgsOutcome, Termination};

/// Objective value split into its terms; `total = lambda1 * energy + data +
/// lambda2 * regularizer` for LDDMM stages and `total = data` otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub total: f64,
    pub data: f64,
    pub energy: f64,
    pub regularizer: f64,
}

impl ObjectiveBreakdown {
    pub fn data_only(data: f64) -> Self {
        ObjectiveBreakdown {
            total: data,
            data,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    #[serde(flatten)]
    pub objective: ObjectiveBreakdown,
    pub grad_norm: f64,
    pub evaluations: usize,
}

/// Summary of one optimization stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub sigma_w: Option<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: String,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
    /// Not serialized, so that reports of identical runs are identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl StageReport {
    pub fn initial(&self) -> Option<&ObjectiveBreakdown> {
        self.trace.first().map(|t| &t.objective)
    }

    pub fn last(&self) -> Option<&ObjectiveBreakdown> {
        self.trace.last().map(|t| &t.objective)
    }

    pub(crate) fn from_lbfgs(
        name: &str,
        sigma_w: Option<f64>,
        out: &LbfgsOutcome<ObjectiveBreakdown>,
        wall_time_s: f64,
    ) -> Self {
        StageReport {
            name: name.to_string(),
            sigma_w,
            iterations: out.iterations,
            evaluations: out.evaluations,
            termination: termination_name(out.termination).to_string(),
            converged: out.termination.converged(),
            trace: out
                .trace
                .iter()
                .map(|r| TraceEntry {
                    iter: r.iter,
                    objective: r.info,
                    grad_norm: r.grad_norm,
                    evaluations: r.evaluations,
                })
                .collect(),
            wall_time_s,
        }
    }
}

pub(crate) fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::ZeroGradient => "zero_gradient",
        Termination::GradientTolerance => "gradient_tolerance",
        Termination::MaxIterations => "max_iterations",
        Termination::LineSearchFailure => "line_search_failure",
    }
}

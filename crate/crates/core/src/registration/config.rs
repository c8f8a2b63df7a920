use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lbfgs::LbfgsOptions;
use crate::deformation::DEFAULT_SCALE_DIVISORS;
use crate::error::{Error, Result};
use crate::varifold::{RegularizerKind, VarifoldKernelConfig, DEFAULT_EPSILON};

/// Settings shared by every registration stage. Missing JSON fields take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    /// Varifold kernel widths (mm), coarse to fine; one optimization stage each.
    pub sigma_w_schedule: Vec<f64>,
    /// Deformation kernel width (mm); half the target bounding-box diagonal when unset.
    pub sigma0: Option<f64>,
    pub scale_divisors: Vec<f64>,
    /// Weight of the path energy.
    pub lambda1: f64,
    /// Weight of the mass regularizer.
    pub lambda2: f64,
    pub regularizer: RegularizerKind,
    pub epsilon: f64,
    pub weighted_quadrature: bool,
    /// Optional kernel truncation radius in units of `sigma_w`.
    pub kernel_cutoff: Option<f64>,
    /// Rotation clamp for the rigid stage (degrees).
    pub max_angle_deg: f64,
    pub n_steps: usize,
    pub lbfgs: LbfgsOptions,
    pub icp: IcpOptions,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig {
            sigma_w_schedule: vec![10.0, 5.0],
            sigma0: None,
            scale_divisors: DEFAULT_SCALE_DIVISORS.to_vec(),
            lambda1: 1000.0,
            lambda2: 1.0,
            regularizer: RegularizerKind::Local,
            epsilon: DEFAULT_EPSILON,
            weighted_quadrature: false,
            kernel_cutoff: None,
            max_angle_deg: 15.0,
            n_steps: 10,
            lbfgs: LbfgsOptions::default(),
            icp: IcpOptions::default(),
        }
    }
}

/// Iteration budget of the ICP baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpOptions {
    pub max_iters: usize,
    /// Stop when the mean distance decreases by less than this fraction.
    pub rel_tol: f64,
}

impl Default for IcpOptions {
    fn default() -> Self {
        IcpOptions {
            max_iters: 200,
            rel_tol: 1e-12,
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.sigma_w_schedule.is_empty() {
            return bad("sigma_w_schedule is empty".into());
        }
        if self
            .sigma_w_schedule
            .iter()
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return bad("sigma_w_schedule entries must be positive".into());
        }
        if self.sigma_w_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("sigma_w_schedule must be strictly decreasing".into());
        }
        if let Some(s) = self.sigma0 {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sigma0 must be positive, got {s}"));
            }
        }
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be positive, got {}", self.lambda1));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return bad(format!(
                "lambda2 must be non-negative, got {}",
                self.lambda2
            ));
        }
        if !(self.max_angle_deg > 0.0 && self.max_angle_deg < 90.0) {
            return bad(format!(
                "max_angle_deg must lie in (0, 90), got {}",
                self.max_angle_deg
            ));
        }
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1".into());
        }
        self.kernel_config(self.sigma_w_schedule[0])?;
        self.lbfgs.validate()
    }

    pub fn kernel_config(&self, sigma_w: f64) -> Result<VarifoldKernelConfig> {
        let cfg = VarifoldKernelConfig {
            sigma_w,
            epsilon: self.epsilon,
            weighted_quadrature: self.weighted_quadrature,
            cutoff: self.kernel_cutoff,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn coarsest_sigma_w(&self) -> f64 {
        self.sigma_w_schedule[0]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RegistrationConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

use serde::{Deserialize, Serialize};

use super::neighbors::Neighbors;
use super::representer::{cross_representer, self_representer_backward};
use crate::error::{Error, Result};
use crate::geometry::{DiscreteVarifold, ElementGradient};

/// Which mass-preservation penalty to add to the LDDMM objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    None,
    Global,
    #[default]
    Local,
}

impl std::str::FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RegularizerKind::None),
            "global" => Ok(RegularizerKind::Global),
            "local" => Ok(RegularizerKind::Local),
            other => Err(Error::InvalidConfig(format!(
                "unknown regularizer {other:?}"
            ))),
        }
    }
}

/// Penalizes change of the representer mass between a source and its deformed
/// copy (same element count, index correspondence).
///
/// * global: `(Σ_i ω_S(x̂_i) - Σ_i ω_D(x̂'_i))²`
/// * local: `Σ_i (ω_S(x̂_i) - ω_D(x̂'_i) · w'_i / w_i)²`
///
/// The area ratio `w'_i / w_i` stands in for the tangential Jacobian of the
/// deformation.
pub struct MassRegularizer {
    kind: RegularizerKind,
    source_omega: Vec<f64>,
    source_weights: Vec<f64>,
    sigma_w: f64,
    cutoff: Option<f64>,
}

impl MassRegularizer {
    pub fn new(
        kind: RegularizerKind,
        source: &DiscreteVarifold,
        sigma_w: f64,
        cutoff: Option<f64>,
    ) -> Result<Self> {
        if kind == RegularizerKind::Local {
            if let Some(i) = source.weights().iter().position(|&w| w == 0.0) {
                return Err(Error::ZeroWeight { index: i });
            }
        }
        let nb = Neighbors::new(source.centers(), cutoff);
        Ok(MassRegularizer {
            kind,
            source_omega: cross_representer(source, source, sigma_w, &nb),
            source_weights: source.weights().to_vec(),
            sigma_w,
            cutoff,
        })
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn value(&self, deformed: &DiscreteVarifold) -> Result<f64> {
        Ok(self.evaluate(deformed, false)?.0)
    }

    pub fn value_and_gradient(
        &self,
        deformed: &DiscreteVarifold,
    ) -> Result<(f64, ElementGradient)> {
        let (v, g) = self.evaluate(deformed, true)?;
        Ok((v, g.expect("gradient requested")))
    }

    fn evaluate(
        &self,
        deformed: &DiscreteVarifold,
        with_gradient: bool,
    ) -> Result<(f64, Option<ElementGradient>)> {
        let n = self.source_omega.len();
        if deformed.len() != n {
            return Err(Error::CountMismatch {
                expected: n,
                found: deformed.len(),
            });
        }
        if self.kind == RegularizerKind::None {
            return Ok((0.0, with_gradient.then(|| ElementGradient::zeros(n))));
        }
        let nb = Neighbors::new(deformed.centers(), self.cutoff);
        let omega = cross_representer(deformed, deformed, self.sigma_w, &nb);
        let mut grad = with_gradient.then(|| ElementGradient::zeros(n));
        let value = match self.kind {
            RegularizerKind::Global => {
                let diff: f64 = self.source_omega.iter().sum::<f64>() - omega.iter().sum::<f64>();
                if let Some(g) = grad.as_mut() {
                    let coeff = vec![-2.0 * diff; n];
                    self_representer_backward(deformed, &coeff, self.sigma_w, &nb, g);
                }
                diff * diff
            }
            RegularizerKind::Local => {
                let mut value = 0.0;
                let mut coeff = vec![0.0; n];
                let mut direct = vec![0.0; n];
                for i in 0..n {
                    let ratio = deformed.weights()[i] / self.source_weights[i];
                    let d = self.source_omega[i] - omega[i] * ratio;
                    value += d * d;
                    coeff[i] = -2.0 * d * ratio;
                    direct[i] = -2.0 * d * omega[i] / self.source_weights[i];
                }
                if let Some(g) = grad.as_mut() {
                    g.weights.copy_from_slice(&direct);
                    self_representer_backward(deformed, &coeff, self.sigma_w, &nb, g);
                }
                value
            }
            RegularizerKind::None => unreachable!(),
        };
        Ok((value, grad))
    }
}

/// Global mass penalty between a source and its deformed copy.
pub fn regularizer_global(
    s: &DiscreteVarifold,
    s_def: &DiscreteVarifold,
    sigma_w: f64,
) -> Result<f64> {
    MassRegularizer::new(RegularizerKind::Global, s, sigma_w, None)?.value(s_def)
}

/// Local (per-element) mass penalty between a source and its deformed copy.
pub fn regularizer_local(
    s: &DiscreteVarifold,
    s_def: &DiscreteVarifold,
    sigma_w: f64,
) -> Result<f64> {
    MassRegularizer::new(RegularizerKind::Local, s, sigma_w, None)?.value(s_def)
}

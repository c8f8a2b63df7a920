use serde::{Deserialize, Serialize};

/// Comparison of an analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckReport {
    /// `|g_analytic - g_fd| / max(|g_analytic|, |g_fd|)` (Euclidean norms).
    pub relative_error: f64,
    /// Largest component error, relative to the largest gradient component.
    pub max_component_error: f64,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
}

/// Central differences of `value` with step `step` in every coordinate,
/// compared to `gradient`.
pub fn gradient_check(
    value: impl Fn(&[f64]) -> f64,
    gradient: &[f64],
    x: &[f64],
    step: f64,
) -> GradientCheckReport {
    let mut numeric = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let fp = value(&xp);
        xp[i] = x[i] - step;
        let fm = value(&xp);
        xp[i] = x[i];
        numeric.push((fp - fm) / (2.0 * step));
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let diff: Vec<f64> = gradient.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let (an, nn) = (norm(gradient), norm(&numeric));
    let scale = an.max(nn);
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let inf_scale = inf(gradient).max(inf(&numeric));
    GradientCheckReport {
        relative_error: if scale > 0.0 {
            norm(&diff) / scale
        } else {
            0.0
        },
        max_component_error: if inf_scale > 0.0 {
            inf(&diff) / inf_scale
        } else {
            0.0
        },
        analytic_norm: an,
        numeric_norm: nn,
    }
}

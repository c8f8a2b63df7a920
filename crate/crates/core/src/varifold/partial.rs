use rayon::prelude::*;

use super::kernels::{
    hinge_sq, hinge_sq_deriv, smooth_min_one, smooth_min_one_deriv, VarifoldKernelConfig,
};
use super::neighbors::Neighbors;
use super::representer::{cross_representer, self_representer_backward};
use crate::error::{Error, Result};
use crate::geometry::{DiscreteVarifold, ElementGradient};
use crate::Vec3;

/// Target representer values below this are raised to it before dividing.
pub const OMEGA_FLOOR: f64 = 1e-30;

/// Result of one evaluation of the partial matching term.
#[derive(Debug, Clone)]
pub struct PartialEvaluation {
    pub value: f64,
    pub gradient: Option<ElementGradient>,
}

/// Normalized partial matching term against a fixed target. The target's own
/// representer values are computed once at construction.
///
/// For source elements `(x_i, τ_i, w_i)` and target elements `(y_l, ν_l, v_l)`:
///
/// `Δ(S,T) = Σ_i g(ω_S(x̂_i) - Σ_l min_ε(1, ω_S(x̂_i)/ω_T(ŷ_l)) k(x̂_i, ŷ_l))`
///
/// with `g(s) = max(0,s)²` and `k = k_e k_t` carrying no weights. With
/// `weighted_quadrature` each target term is multiplied by `v_l` and each
/// outer term by `w_i`.
pub struct PartialMatching {
    target: DiscreteVarifold,
    target_omega: Vec<f64>,
    floored: usize,
    cfg: VarifoldKernelConfig,
    target_neighbors: Neighbors,
}

impl PartialMatching {
    pub fn new(target: &DiscreteVarifold, cfg: &VarifoldKernelConfig) -> Result<Self> {
        cfg.validate()?;
        if target.is_empty() {
            return Err(Error::InvalidVarifold("empty target".into()));
        }
        let cutoff = cfg.cutoff_mm();
        let target_neighbors = Neighbors::new(target.centers(), cutoff);
        let mut target_omega = cross_representer(target, target, cfg.sigma_w, &target_neighbors);
        let mut floored = 0;
        for (l, w) in target_omega.iter_mut().enumerate() {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::DegenerateTarget {
                    index: l,
                    value: *w,
                });
            }
            if *w < OMEGA_FLOOR {
                *w = OMEGA_FLOOR;
                floored += 1;
            }
        }
        if floored > 0 {
            log::warn!("{floored} target representer values floored at {OMEGA_FLOOR:e}");
        }
        Ok(PartialMatching {
            target: target.clone(),
            target_omega,
            floored,
            cfg: *cfg,
            target_neighbors,
        })
    }

    pub fn config(&self) -> &VarifoldKernelConfig {
        &self.cfg
    }

    pub fn target(&self) -> &DiscreteVarifold {
        &self.target
    }

    /// `ω_T(ŷ_l)` after flooring.
    pub fn target_omega(&self) -> &[f64] {
        &self.target_omega
    }

    /// How many target representer values were raised to [`OMEGA_FLOOR`].
    pub fn floored_count(&self) -> usize {
        self.floored
    }

    pub fn value(&self, source: &DiscreteVarifold) -> f64 {
        self.evaluate(source, false).value
    }

    pub fn value_and_gradient(&self, source: &DiscreteVarifold) -> (f64, ElementGradient) {
        let e = self.evaluate(source, true);
        (e.value, e.gradient.expect("gradient requested"))
    }

    pub fn evaluate(&self, source: &DiscreteVarifold, with_gradient: bool) -> PartialEvaluation {
        let sigma = self.cfg.sigma_w;
        let inv_s2 = 1.0 / (sigma * sigma);
        let eps = self.cfg.epsilon;
        let weighted = self.cfg.weighted_quadrature;
        let source_neighbors = Neighbors::new(source.centers(), self.cfg.cutoff_mm());
        let omega = cross_representer(source, source, sigma, &source_neighbors);

        let (xc, xd, xw) = (source.centers(), source.directors(), source.weights());
        let (yc, yd, yw) = (
            self.target.centers(),
            self.target.directors(),
            self.target.weights(),
        );
        let tw = &self.target_omega;

        struct Row {
            value: f64,
            // d value / d ω_i through both the outer term and the ratios
            g_omega: f64,
            g_weight: f64,
            g_center: Vec3,
            g_director: Vec3,
        }

        let rows: Vec<Row> = (0..source.len())
            .into_par_iter()
            .map(|i| {
                let om = omega[i];
                let mut covered = 0.0;
                let mut d_covered = 0.0;
                let mut pull = Vec3::zeros();
                let mut turn = Vec3::zeros();
                self.target_neighbors.for_each(&xc[i], |l| {
                    let diff = xc[i] - yc[l];
                    let mut k = (-diff.norm_squared() * inv_s2 + xd[i].dot(&yd[l])).exp();
                    if weighted {
                        k *= yw[l];
                    }
                    let r = om / tw[l];
                    let m = smooth_min_one(r, eps);
                    covered += m * k;
                    if with_gradient {
                        d_covered += smooth_min_one_deriv(r, eps) * k / tw[l];
                        let mk = m * k;
                        pull += diff * mk;
                        turn += yd[l] * mk;
                    }
                });
                let s = om - covered;
                let outer = if weighted { xw[i] } else { 1.0 };
                let value = outer * hinge_sq(s);
                if !with_gradient {
                    return Row {
                        value,
                        g_omega: 0.0,
                        g_weight: 0.0,
                        g_center: Vec3::zeros(),
                        g_director: Vec3::zeros(),
                    };
                }
                let a = outer * hinge_sq_deriv(s);
                Row {
                    value,
                    g_omega: a * (1.0 - d_covered),
                    g_weight: if weighted { hinge_sq(s) } else { 0.0 },
                    // d(-m k)/dx_i = -m k (-2/σ²)(x_i - y_l)
                    g_center: pull * (2.0 * inv_s2 * a),
                    g_director: -turn * a,
                }
            })
            .collect();

        let value = rows.iter().map(|r| r.value).sum();
        if !with_gradient {
            return PartialEvaluation {
                value,
                gradient: None,
            };
        }
        let mut grad = ElementGradient::zeros(source.len());
        let g_omega: Vec<f64> = rows.iter().map(|r| r.g_omega).collect();
        for (i, r) in rows.iter().enumerate() {
            grad.centers[i] = r.g_center;
            grad.directors[i] = r.g_director;
            grad.weights[i] = r.g_weight;
        }
        self_representer_backward(source, &g_omega, sigma, &source_neighbors, &mut grad);
        PartialEvaluation {
            value,
            gradient: Some(grad),
        }
    }
}

/// One-shot partial matching dissimilarity `Δ(S, T)`; asymmetric in its arguments.
pub fn partial_dissimilarity(
    s: &DiscreteVarifold,
    t: &DiscreteVarifold,
    cfg: &VarifoldKernelConfig,
) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidVarifold("empty source".into()));
    }
    Ok(PartialMatching::new(t, cfg)?.value(s))
}

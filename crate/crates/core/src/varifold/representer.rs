use rayon::prelude::*;

use super::neighbors::Neighbors;
use crate::geometry::{DiscreteVarifold, ElementGradient};
use crate::Vec3;

/// `ω_of` evaluated at every element of `at`:
/// `ω_i = Σ_j k_e(x_i, y_j) k_t(τ_i, ν_j) w_i v_j`.
/// With `at == of` this is the shape's own representer at its elements.
pub fn representer_values(at: &DiscreteVarifold, of: &DiscreteVarifold, sigma_w: f64) -> Vec<f64> {
    cross_representer(at, of, sigma_w, &Neighbors::All(of.len()))
}

pub(crate) fn cross_representer(
    at: &DiscreteVarifold,
    of: &DiscreteVarifold,
    sigma_w: f64,
    nb: &Neighbors,
) -> Vec<f64> {
    let inv_s2 = 1.0 / (sigma_w * sigma_w);
    let (xc, xd, xw) = (at.centers(), at.directors(), at.weights());
    let (yc, yd, yw) = (of.centers(), of.directors(), of.weights());
    (0..at.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            nb.for_each(&xc[i], |j| {
                acc += (-(xc[i] - yc[j]).norm_squared() * inv_s2 + xd[i].dot(&yd[j])).exp() * yw[j];
            });
            acc * xw[i]
        })
        .collect()
}

/// Varifold inner product `Σ_i Σ_l k_e k_t w_i v_l`.
pub fn inner_product(s: &DiscreteVarifold, t: &DiscreteVarifold, sigma_w: f64) -> f64 {
    representer_values(s, t, sigma_w).iter().sum()
}

/// Squared kernel distance `<S,S> - 2<S,T> + <T,T>`.
pub fn distance_sq(s: &DiscreteVarifold, t: &DiscreteVarifold, sigma_w: f64) -> f64 {
    inner_product(s, s, sigma_w) - 2.0 * inner_product(s, t, sigma_w) + inner_product(t, t, sigma_w)
}

/// Adds to `out` the gradient of `Σ_i g_i ω_S(x̂_i)` with respect to the
/// elements of `s`, where `ω_S` is the shape's own representer and `g` is held
/// fixed.
pub(crate) fn self_representer_backward(
    s: &DiscreteVarifold,
    g: &[f64],
    sigma_w: f64,
    nb: &Neighbors,
    out: &mut ElementGradient,
) {
    let inv_s2 = 1.0 / (sigma_w * sigma_w);
    let (xc, xd, xw) = (s.centers(), s.directors(), s.weights());
    let per: Vec<(Vec3, Vec3, f64)> = (0..s.len())
        .into_par_iter()
        .map(|k| {
            let mut gx = Vec3::zeros();
            let mut gt = Vec3::zeros();
            let mut gw = 0.0;
            nb.for_each(&xc[k], |j| {
                let diff = xc[k] - xc[j];
                let kv = (-diff.norm_squared() * inv_s2 + xd[k].dot(&xd[j])).exp();
                let coeff = (g[k] + g[j]) * xw[j] * kv;
                gw += coeff;
                let c = coeff * xw[k];
                gx -= diff * (2.0 * inv_s2 * c);
                gt += xd[j] * c;
            });
            (gx, gt, gw)
        })
        .collect();
    for (k, (gx, gt, gw)) in per.into_iter().enumerate() {
        out.centers[k] += gx;
        out.directors[k] += gt;
        out.weights[k] += gw;
    }
}

use rand::Rng;

use crate::geometry::{DiscreteVarifold, ElementGradient};
use crate::Vec3;

pub(crate) fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

pub(crate) fn random_varifold<R: Rng>(rng: &mut R, n: usize, extent: f64) -> DiscreteVarifold {
    let centers = (0..n)
        .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()) * extent)
        .collect();
    let directors = (0..n).map(|_| random_unit(rng)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
    DiscreteVarifold::new(centers, directors, weights).unwrap()
}

/// Central differences over every center, director and weight component,
/// compared norm-wise against `grad`.
pub(crate) fn fd_check_elements(
    v: &DiscreteVarifold,
    grad: &ElementGradient,
    f: impl Fn(&DiscreteVarifold) -> f64,
    tol: f64,
) {
    let h = 1e-5;
    let (c, d, w) = v.clone().into_parts();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let eval = |c: &[Vec3], d: &[Vec3], w: &[f64]| {
        f(&DiscreteVarifold::from_parts_unchecked(
            c.to_vec(),
            d.to_vec(),
            w.to_vec(),
        ))
    };
    for i in 0..v.len() {
        for k in 0..3 {
            let (mut cp, mut cm) = (c.clone(), c.clone());
            cp[i][k] += h;
            cm[i][k] -= h;
            numeric.push((eval(&cp, &d, &w) - eval(&cm, &d, &w)) / (2.0 * h));
            analytic.push(grad.centers[i][k]);

            let (mut dp, mut dm) = (d.clone(), d.clone());
            dp[i][k] += h;
            dm[i][k] -= h;
            numeric.push((eval(&c, &dp, &w) - eval(&c, &dm, &w)) / (2.0 * h));
            analytic.push(grad.directors[i][k]);
        }
        let (mut wp, mut wm) = (w.clone(), w.clone());
        wp[i] += h;
        wm[i] -= h;
        numeric.push((eval(&c, &d, &wp) - eval(&c, &d, &wm)) / (2.0 * h));
        analytic.push(grad.weights[i]);
    }
    let err: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
    assert!(scale > 0.0, "gradient is identically zero");
    assert!(
        err <= tol * scale,
        "relative gradient error {}",
        err / scale
    );
}

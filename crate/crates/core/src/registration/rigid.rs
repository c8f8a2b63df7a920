use std::time::Instant;

use nalgebra::SVD;

use super::config::RegistrationConfig;
use super::lbfgs::lbfgs_minimize;
use super::report::{ObjectiveBreakdown, StageReport, TraceEntry};
use crate::error::{Error, Result};
use crate::geometry::{
    barycenter_translation, euler_xyz_jacobian, euler_xyz_matrix, DiscreteVarifold, RigidTransform,
};
use crate::varifold::{icp_dissimilarity, nearest_neighbors, PartialMatching};
use crate::{Mat3, Vec3};

/// A rigid stage: the transform maps the original source onto the target.
#[derive(Debug, Clone)]
pub struct RigidOutcome {
    pub transform: RigidTransform,
    pub report: StageReport,
}

fn about_center(r: &Mat3, center: &Vec3, pre: &Vec3, t: &Vec3) -> RigidTransform {
    // x -> R (x + pre - c) + c + t
    RigidTransform::from_matrix(r, r * (pre - center) + center + t)
}

/// Translation that aligns the weighted barycenters.
pub fn register_translation(source: &DiscreteVarifold, target: &DiscreteVarifold) -> RigidOutcome {
    let start = Instant::now();
    let t = barycenter_translation(source, target);
    let before = icp_dissimilarity(source, target);
    let after = icp_dissimilarity(&source.translated(&t), target);
    let entry = |iter, v| TraceEntry {
        iter,
        objective: ObjectiveBreakdown::data_only(v),
        grad_norm: 0.0,
        evaluations: 1,
    };
    RigidOutcome {
        transform: RigidTransform::from_translation(t),
        report: StageReport {
            name: "translation".into(),
            sigma_w: None,
            iterations: 1,
            evaluations: 2,
            termination: "closed_form".into(),
            converged: true,
            trace: vec![entry(0, before), entry(1, after)],
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    }
}

/// Partial matching term as a function of six rigid parameters, after
/// aligning barycenters. Rotation is about the aligned source barycenter;
/// each Euler angle is `max_angle * tanh(theta_k)` and the translation is
/// `sigma_w * u`.
pub struct RigidObjective {
    matching: PartialMatching,
    aligned: DiscreteVarifold,
    rel: Vec<Vec3>,
    pre: Vec3,
    center: Vec3,
    max_angle: f64,
    sigma_w: f64,
}

impl RigidObjective {
    pub fn new(
        source: &DiscreteVarifold,
        target: &DiscreteVarifold,
        cfg: &RegistrationConfig,
        sigma_w: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        if source.is_empty() {
            return Err(Error::InvalidVarifold("empty source".into()));
        }
        let matching = PartialMatching::new(target, &cfg.kernel_config(sigma_w)?)?;
        let pre = barycenter_translation(source, target);
        let aligned = source.translated(&pre);
        let center = aligned.barycenter();
        let rel = aligned.centers().iter().map(|c| c - center).collect();
        Ok(RigidObjective {
            matching,
            aligned,
            rel,
            pre,
            center,
            max_angle: cfg.max_angle_deg.to_radians(),
            sigma_w,
        })
    }

    fn pose(&self, x: &[f64]) -> ([f64; 3], Vec3) {
        let a = self.max_angle;
        let angles = [a * x[0].tanh(), a * x[1].tanh(), a * x[2].tanh()];
        (angles, Vec3::new(x[3], x[4], x[5]) * self.sigma_w)
    }

    /// Transform from the original source for parameters `x`.
    pub fn transform(&self, x: &[f64]) -> RigidTransform {
        let (angles, t) = self.pose(x);
        about_center(&euler_xyz_matrix(angles), &self.center, &self.pre, &t)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x, false).0
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (v, g) = self.evaluate(x, true);
        (v, g.expect("gradient requested"))
    }

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> (f64, Option<Vec<f64>>) {
        assert_eq!(x.len(), 6, "rigid parameters are (theta, u)");
        let (angles, t) = self.pose(x);
        let r = euler_xyz_matrix(angles);
        let moved = DiscreteVarifold::from_parts_unchecked(
            self.rel.iter().map(|c| r * c + self.center + t).collect(),
            self.aligned.directors().iter().map(|d| r * d).collect(),
            self.aligned.weights().to_vec(),
        );
        let eval = self.matching.evaluate(&moved, with_gradient);
        let Some(g) = eval.gradient else {
            return (eval.value, None);
        };
        let jac = euler_xyz_jacobian(angles);
        let mut grad = vec![0.0; 6];
        for k in 0..3 {
            let mut ga = 0.0;
            for (i, rel) in self.rel.iter().enumerate() {
                ga += g.centers[i].dot(&(jac[k] * rel))
                    + g.directors[i].dot(&(jac[k] * self.aligned.directors()[i]));
            }
            let th = x[k].tanh();
            grad[k] = ga * self.max_angle * (1.0 - th * th);
        }
        let gt: Vec3 = g.centers.iter().sum::<Vec3>() * self.sigma_w;
        grad[3..].copy_from_slice(gt.as_slice());
        (eval.value, Some(grad))
    }
}

/// Minimizes [`RigidObjective`] at the coarsest kernel width.
pub fn register_rigid_partial(
    source: &DiscreteVarifold,
    target: &DiscreteVarifold,
    cfg: &RegistrationConfig,
) -> Result<RigidOutcome> {
    let start = Instant::now();
    let sigma = cfg.coarsest_sigma_w();
    let obj = RigidObjective::new(source, target, cfg, sigma)?;
    let f = |x: &[f64]| -> Result<(f64, Vec<f64>, ObjectiveBreakdown)> {
        let (v, g) = obj.value_and_gradient(x);
        Ok((v, g, ObjectiveBreakdown::data_only(v)))
    };
    let out = lbfgs_minimize(f, &[0.0; 6], &cfg.lbfgs)?;
    Ok(RigidOutcome {
        transform: obj.transform(&out.x),
        report: StageReport::from_lbfgs(
            "rigid_pm",
            Some(sigma),
            &out,
            start.elapsed().as_secs_f64(),
        ),
    })
}

/// Rigid ICP on element centers after barycenter alignment. Each iteration
/// matches every source center to its nearest target center and solves a
/// weighted orthogonal Procrustes problem with weights `1/distance`
/// (iteratively reweighted least squares for the mean distance), so the mean
/// closest distance never increases.
pub fn register_icp_rigid(
    source: &DiscreteVarifold,
    target: &DiscreteVarifold,
    cfg: &RegistrationConfig,
) -> Result<RigidOutcome> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::InvalidVarifold("empty shape".into()));
    }
    let start = Instant::now();
    let pre = barycenter_translation(source, target);
    let src = source.centers();
    let tgt = target.centers();
    let scale = crate::geometry::bounding_box(tgt)
        .map(|(lo, hi)| (hi - lo).norm())
        .unwrap_or(1.0)
        .max(f64::MIN_POSITIVE);
    let floor = 1e-12 * scale;

    // points are always produced by the transform that is returned, so the
    // reported value is exactly the distance of the final alignment
    let place =
        |t: &RigidTransform| -> Vec<Vec3> { src.iter().map(|p| t.apply_point(p)).collect() };
    let mut transform = RigidTransform::from_translation(pre);
    let mut cur = place(&transform);
    let mut nn = nearest_neighbors(&cur, tgt);
    let mean = |nn: &[(usize, f64)]| nn.iter().map(|&(_, d)| d).sum::<f64>() / nn.len() as f64;
    let mut value = mean(&nn);
    let mut trace = vec![TraceEntry {
        iter: 0,
        objective: ObjectiveBreakdown::data_only(value),
        grad_norm: 0.0,
        evaluations: 1,
    }];
    let mut termination = "max_iterations";
    let mut iters = 0;
    for it in 1..=cfg.icp.max_iters {
        if value == 0.0 {
            termination = "exact_fit";
            break;
        }
        let (r, t) = weighted_procrustes(&cur, tgt, &nn, floor);
        let cand_transform = RigidTransform::from_matrix(
            &(r * transform.rotation_matrix()),
            r * transform.translation_vector() + t,
        );
        let cand = place(&cand_transform);
        let cand_nn = nearest_neighbors(&cand, tgt);
        let cand_value = mean(&cand_nn);
        if !(cand_value <= value) {
            termination = "no_improvement";
            break;
        }
        let decrease = value - cand_value;
        transform = cand_transform;
        cur = cand;
        nn = cand_nn;
        value = cand_value;
        iters = it;
        trace.push(TraceEntry {
            iter: it,
            objective: ObjectiveBreakdown::data_only(value),
            grad_norm: 0.0,
            evaluations: it + 1,
        });
        if decrease <= cfg.icp.rel_tol * value {
            termination = "converged";
            break;
        }
    }
    Ok(RigidOutcome {
        transform,
        report: StageReport {
            name: "icp_rigid".into(),
            sigma_w: None,
            iterations: iters,
            evaluations: iters + 1,
            termination: termination.into(),
            converged: termination != "max_iterations",
            trace,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Proper rotation and translation minimizing `Σ w_i |R p_i + t - q_{nn(i)}|²`
/// with `w_i = 1 / max(d_i, floor)`. Falls back to a translation when the
/// cross-covariance is rank-deficient.
fn weighted_procrustes(p: &[Vec3], q: &[Vec3], nn: &[(usize, f64)], floor: f64) -> (Mat3, Vec3) {
    let w: Vec<f64> = nn.iter().map(|&(_, d)| 1.0 / d.max(floor)).collect();
    let wsum: f64 = w.iter().sum();
    let mp: Vec3 = p.iter().zip(&w).map(|(x, wi)| x * *wi).sum::<Vec3>() / wsum;
    let mq: Vec3 = nn
        .iter()
        .zip(&w)
        .map(|(&(j, _), wi)| q[j] * *wi)
        .sum::<Vec3>()
        / wsum;
    let mut h = Mat3::zeros();
    for ((x, &(j, _)), wi) in p.iter().zip(nn).zip(&w) {
        h += (x - mp) * (q[j] - mq).transpose() * *wi;
    }
    let svd = SVD::new(h, true, true);
    let s = svd.singular_values;
    if !(s[1] > 1e-12 * s[0]) {
        return (Mat3::identity(), mq - mp);
    }
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let v = vt.transpose();
    let mut d = Mat3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v * d * u.transpose();
    (r, mq - r * mp)
}

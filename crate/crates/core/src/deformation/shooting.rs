use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::DeformationKernel;
use crate::error::{Error, Result};
use crate::Vec3;

/// Control points and their momenta; together they generate the velocity field
/// `v(x) = Σ_i K(x, q_i) p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingState {
    pub control_points: Vec<Vec3>,
    pub momenta: Vec<Vec3>,
}

impl ShootingState {
    pub fn new(control_points: Vec<Vec3>, momenta: Vec<Vec3>) -> Result<Self> {
        if control_points.len() != momenta.len() {
            return Err(Error::CountMismatch {
                expected: control_points.len(),
                found: momenta.len(),
            });
        }
        let state = ShootingState {
            control_points,
            momenta,
        };
        if !state.is_finite() {
            return Err(Error::InvalidConfig("shooting state is not finite".into()));
        }
        Ok(state)
    }

    /// Zero momenta at the given points.
    pub fn at_rest(control_points: Vec<Vec3>) -> Self {
        let n = control_points.len();
        ShootingState {
            control_points,
            momenta: vec![Vec3::zeros(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.control_points
            .iter()
            .chain(&self.momenta)
            .all(|v| v.iter().all(|c| c.is_finite()))
    }

    pub fn momentum_sum(&self) -> Vec3 {
        self.momenta.iter().sum()
    }

    /// Momenta flattened to `[p0x, p0y, p0z, p1x, ...]`.
    pub fn flat_momenta(&self) -> Vec<f64> {
        flatten(&self.momenta)
    }
}

pub(crate) fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

pub(crate) fn unflatten(x: &[f64]) -> Vec<Vec3> {
    x.chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect()
}

/// Integrated geodesic: `states[k]` is the state at `t = k * duration / n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub states: Vec<ShootingState>,
    pub n_steps: usize,
    pub duration: f64,
}

impl FlowTrajectory {
    pub fn dt(&self) -> f64 {
        self.duration / self.n_steps as f64
    }

    pub fn initial(&self) -> &ShootingState {
        &self.states[0]
    }

    pub fn last(&self) -> &ShootingState {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn has_zero_momenta(&self) -> bool {
        self.states[0].momenta.iter().all(|p| *p == Vec3::zeros())
    }
}

/// `H(q, p) = ½ Σ_ij <p_i, p_j> K(q_i, q_j)`.
pub fn hamiltonian(state: &ShootingState, kernel: &DeformationKernel) -> f64 {
    let q = &state.control_points;
    let p = &state.momenta;
    let rows: Vec<f64> = (0..q.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..q.len() {
                acc += p[i].dot(&p[j]) * kernel.value_sq((q[i] - q[j]).norm_squared());
            }
            acc
        })
        .collect();
    0.5 * rows.iter().sum::<f64>()
}

/// `∫₀¹ |v_t|²_V dt`, which along a geodesic equals `|v_0|²_V = 2 H(q₀, p₀)`.
pub fn path_energy(initial: &ShootingState, kernel: &DeformationKernel) -> f64 {
    2.0 * hamiltonian(initial, kernel)
}

/// Gradient of [`path_energy`] with respect to the initial momenta: `2 K p`.
pub(crate) fn path_energy_momentum_gradient(
    initial: &ShootingState,
    kernel: &DeformationKernel,
) -> Vec<Vec3> {
    let q = &initial.control_points;
    let p = &initial.momenta;
    (0..q.len())
        .into_par_iter()
        .map(|i| velocity_at(&q[i], q, p, kernel) * 2.0)
        .collect()
}

/// `v(x) = Σ_j K(x, q_j) p_j`.
#[inline]
pub(crate) fn velocity_at(x: &Vec3, q: &[Vec3], p: &[Vec3], kernel: &DeformationKernel) -> Vec3 {
    let mut v = Vec3::zeros();
    for (qj, pj) in q.iter().zip(p) {
        v += pj * kernel.value_sq((x - qj).norm_squared());
    }
    v
}

/// Hamiltonian vector field `(∂H/∂p, -∂H/∂q)`.
pub(crate) fn hamiltonian_field(
    q: &[Vec3],
    p: &[Vec3],
    kernel: &DeformationKernel,
) -> (Vec<Vec3>, Vec<Vec3>) {
    (0..q.len())
        .into_par_iter()
        .map(|i| {
            // same kernel values and summation order as `velocity_at`
            let mut dq = Vec3::zeros();
            let mut dp = Vec3::zeros();
            for j in 0..q.len() {
                let diff = q[i] - q[j];
                let (f, slope) = kernel.value_and_slope_sq(diff.norm_squared());
                dq += p[j] * f;
                dp -= diff * (2.0 * slope * p[i].dot(&p[j]));
            }
            (dq, dp)
        })
        .unzip()
}

/// Vector-Jacobian product of [`hamiltonian_field`]: given cotangents
/// `(a, b)` of `(dq, dp)`, returns the cotangents of `(q, p)`.
pub(crate) fn hamiltonian_field_vjp(
    q: &[Vec3],
    p: &[Vec3],
    a: &[Vec3],
    b: &[Vec3],
    kernel: &DeformationKernel,
) -> (Vec<Vec3>, Vec<Vec3>) {
    (0..q.len())
        .into_par_iter()
        .map(|k| {
            let mut gq = Vec3::zeros();
            let mut gp = Vec3::zeros();
            for j in 0..q.len() {
                let diff = q[k] - q[j];
                let (f, d1, d2) = kernel.derivatives_sq(diff.norm_squared());
                let c = 2.0 * d1;
                let db = b[k] - b[j];
                let e = db.dot(&diff);
                let pp = p[k].dot(&p[j]);
                gp += a[j] * f - p[j] * (c * e);
                gq += diff * (c * (a[k].dot(&p[j]) + a[j].dot(&p[k])));
                gq -= (diff * (4.0 * d2 * e) + db * c) * pp;
            }
            (gq, gp)
        })
        .unzip()
}

fn axpy(base: &[Vec3], step: f64, dir: &[Vec3]) -> Vec<Vec3> {
    base.iter().zip(dir).map(|(b, d)| b + d * step).collect()
}

fn rk4_combine(base: &[Vec3], h: f64, k: [&[Vec3]; 4]) -> Vec<Vec3> {
    (0..base.len())
        .map(|i| base[i] + (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (h / 6.0))
        .collect()
}

/// The four RK4 stage derivatives from one state.
pub(crate) struct Rk4Stages {
    pub(crate) dq: [Vec<Vec3>; 4],
    pub(crate) dp: [Vec<Vec3>; 4],
    /// Stage states (q, p) at which `dq`/`dp` were evaluated.
    pub(crate) q: [Vec<Vec3>; 4],
    pub(crate) p: [Vec<Vec3>; 4],
}

pub(crate) fn rk4_stages(q: &[Vec3], p: &[Vec3], h: f64, kernel: &DeformationKernel) -> Rk4Stages {
    let (dq1, dp1) = hamiltonian_field(q, p, kernel);
    let (q2, p2) = (axpy(q, 0.5 * h, &dq1), axpy(p, 0.5 * h, &dp1));
    let (dq2, dp2) = hamiltonian_field(&q2, &p2, kernel);
    let (q3, p3) = (axpy(q, 0.5 * h, &dq2), axpy(p, 0.5 * h, &dp2));
    let (dq3, dp3) = hamiltonian_field(&q3, &p3, kernel);
    let (q4, p4) = (axpy(q, h, &dq3), axpy(p, h, &dp3));
    let (dq4, dp4) = hamiltonian_field(&q4, &p4, kernel);
    Rk4Stages {
        dq: [dq1, dq2, dq3, dq4],
        dp: [dp1, dp2, dp3, dp4],
        q: [q.to_vec(), q2, q3, q4],
        p: [p.to_vec(), p2, p3, p4],
    }
}

/// Integrates Hamilton's equations on `[0, 1]` with `n_steps` RK4 steps.
pub fn shoot(
    initial: &ShootingState,
    kernel: &DeformationKernel,
    n_steps: usize,
) -> Result<FlowTrajectory> {
    shoot_interval(initial, kernel, n_steps, 1.0)
}

/// Same scheme over `[0, duration]`, with step `duration / n_steps`.
pub fn shoot_interval(
    initial: &ShootingState,
    kernel: &DeformationKernel,
    n_steps: usize,
    duration: f64,
) -> Result<FlowTrajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let h = duration / n_steps as f64;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(initial.clone());
    for step in 0..n_steps {
        let cur = &states[step];
        let st = rk4_stages(&cur.control_points, &cur.momenta, h, kernel);
        let next = ShootingState {
            control_points: rk4_combine(
                &cur.control_points,
                h,
                [&st.dq[0], &st.dq[1], &st.dq[2], &st.dq[3]],
            ),
            momenta: rk4_combine(
                &cur.momenta,
                h,
                [&st.dp[0], &st.dp[1], &st.dp[2], &st.dp[3]],
            ),
        };
        if !next.is_finite() {
            return Err(Error::Divergence { step: step + 1 });
        }
        states.push(next);
    }
    Ok(FlowTrajectory {
        states,
        n_steps,
        duration,
    })
}

/// Discrete adjoint of [`shoot`]: given the gradient of a loss with respect to
/// the final `(q, p)`, returns its gradient with respect to the initial `(q, p)`.
/// Exact for the discretized flow.
pub fn shoot_backward(
    trajectory: &FlowTrajectory,
    kernel: &DeformationKernel,
    grad_q_end: &[Vec3],
    grad_p_end: &[Vec3],
) -> (Vec<Vec3>, Vec<Vec3>) {
    let h = trajectory.dt();
    let mut lq = grad_q_end.to_vec();
    let mut lp = grad_p_end.to_vec();
    for step in (0..trajectory.n_steps).rev() {
        let s = &trajectory.states[step];
        let st = rk4_stages(&s.control_points, &s.momenta, h, kernel);
        // cotangents of the stage derivatives, from z' = z + h/6 (k1 + 2k2 + 2k3 + k4)
        let w = [h / 6.0, h / 3.0, h / 3.0, h / 6.0];
        let mut gkq: [Vec<Vec3>; 4] =
            std::array::from_fn(|i| lq.iter().map(|v| v * w[i]).collect());
        let mut gkp: [Vec<Vec3>; 4] =
            std::array::from_fn(|i| lp.iter().map(|v| v * w[i]).collect());
        // stage j+1 was evaluated at z + c_j h k_j
        let c = [0.5, 0.5, 1.0];
        for stage in (0..4).rev() {
            let (uq, up) =
                hamiltonian_field_vjp(&st.q[stage], &st.p[stage], &gkq[stage], &gkp[stage], kernel);
            for i in 0..lq.len() {
                lq[i] += uq[i];
                lp[i] += up[i];
            }
            if stage > 0 {
                let f = c[stage - 1] * h;
                for i in 0..lq.len() {
                    gkq[stage - 1][i] += uq[i] * f;
                    gkp[stage - 1][i] += up[i] * f;
                }
            }
        }
    }
    (lq, lp)
}

use std::time::Instant;

use super::config::RegistrationConfig;
use super::lbfgs::lbfgs_minimize;
use super::report::{ObjectiveBreakdown, StageReport};
use crate::deformation::{
    flatten, path_energy, path_energy_momentum_gradient, shoot, shoot_backward, unflatten,
    DeformationKernel, ShootingState,
};
use crate::error::{Error, Result};
use crate::geometry::{
    bounding_box, face_elements, face_elements_backward, DiscreteVarifold, Mesh,
};
use crate::varifold::{MassRegularizer, PartialMatching, RegularizerKind};
use crate::Vec3;

/// `J(p) = lambda1 * |v_0|²_V + Δ(φ_1(S), T) + lambda2 * R(S, φ_1(S))` as a
/// function of the initial momenta at the source vertices, for one kernel
/// width `sigma_w`.
pub struct LddmmObjective {
    source: Mesh,
    kernel: DeformationKernel,
    n_steps: usize,
    lambda1: f64,
    lambda2: f64,
    matching: PartialMatching,
    regularizer: Option<MassRegularizer>,
}

impl LddmmObjective {
    pub fn new(
        source: &Mesh,
        target: &DiscreteVarifold,
        kernel: &DeformationKernel,
        cfg: &RegistrationConfig,
        sigma_w: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        let kc = cfg.kernel_config(sigma_w)?;
        let elements = face_elements(source)?;
        let regularizer = match cfg.regularizer {
            RegularizerKind::None => None,
            kind => Some(MassRegularizer::new(
                kind,
                &elements,
                sigma_w,
                kc.cutoff_mm(),
            )?),
        };
        Ok(LddmmObjective {
            source: source.clone(),
            kernel: kernel.clone(),
            n_steps: cfg.n_steps,
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            matching: PartialMatching::new(target, &kc)?,
            regularizer,
        })
    }

    /// Number of optimization variables (three per source vertex).
    pub fn dim(&self) -> usize {
        3 * self.source.num_vertices()
    }

    pub fn state(&self, momenta: &[f64]) -> ShootingState {
        ShootingState {
            control_points: self.source.vertices().to_vec(),
            momenta: unflatten(momenta),
        }
    }

    /// Source mesh carried by the geodesic with the given initial momenta.
    pub fn deformed(&self, momenta: &[f64]) -> Result<Mesh> {
        let traj = shoot(&self.state(momenta), &self.kernel, self.n_steps)?;
        self.source
            .with_vertices(traj.last().control_points.clone())
    }

    pub fn value(&self, momenta: &[f64]) -> Result<ObjectiveBreakdown> {
        Ok(self.evaluate(momenta, false)?.0)
    }

    pub fn value_and_gradient(&self, momenta: &[f64]) -> Result<(ObjectiveBreakdown, Vec<f64>)> {
        let (b, g) = self.evaluate(momenta, true)?;
        Ok((b, g.expect("gradient requested")))
    }

    fn evaluate(
        &self,
        momenta: &[f64],
        with_gradient: bool,
    ) -> Result<(ObjectiveBreakdown, Option<Vec<f64>>)> {
        if momenta.len() != self.dim() {
            return Err(Error::CountMismatch {
                expected: self.dim(),
                found: momenta.len(),
            });
        }
        let state = self.state(momenta);
        let traj = shoot(&state, &self.kernel, self.n_steps)?;
        let deformed = self
            .source
            .with_vertices(traj.last().control_points.clone())?;
        let elements = face_elements(&deformed)?;
        let energy = path_energy(&state, &self.kernel);

        let eval = self.matching.evaluate(&elements, with_gradient);
        let data = eval.value;
        let mut grad_el = eval.gradient;
        let regularizer = match &self.regularizer {
            None => 0.0,
            Some(reg) if with_gradient => {
                let (v, g) = reg.value_and_gradient(&elements)?;
                if let Some(ge) = grad_el.as_mut() {
                    ge.add_scaled(&g, self.lambda2);
                }
                v
            }
            Some(reg) => reg.value(&elements)?,
        };
        let total = self.lambda1 * energy + data + self.lambda2 * regularizer;
        let breakdown = ObjectiveBreakdown {
            total,
            data,
            energy,
            regularizer,
        };
        if !total.is_finite() {
            return Err(Error::InvalidConfig("objective is not finite".into()));
        }
        let Some(ge) = grad_el else {
            return Ok((breakdown, None));
        };
        let gq_end = face_elements_backward(&deformed, &ge);
        let gp_end = vec![Vec3::zeros(); gq_end.len()];
        let (_, gp0) = shoot_backward(&traj, &self.kernel, &gq_end, &gp_end);
        let ge0 = path_energy_momentum_gradient(&state, &self.kernel);
        let grad: Vec<Vec3> = gp0
            .iter()
            .zip(&ge0)
            .map(|(a, b)| a + b * self.lambda1)
            .collect();
        Ok((breakdown, Some(flatten(&grad))))
    }
}

/// Result of [`register_lddmm`].
#[derive(Debug, Clone)]
pub struct LddmmOutcome {
    /// Initial control points (source vertices) and optimal momenta.
    pub state: ShootingState,
    pub kernel: DeformationKernel,
    pub n_steps: usize,
    pub deformed: Mesh,
    pub stages: Vec<StageReport>,
}

/// Deformation kernel width: the configured value, or half the diagonal of the
/// bounding box of the target element centers.
pub fn resolve_sigma0(cfg: &RegistrationConfig, target: &DiscreteVarifold) -> Result<f64> {
    if let Some(s) = cfg.sigma0 {
        return Ok(s);
    }
    let (lo, hi) = bounding_box(target.centers())
        .ok_or_else(|| Error::InvalidVarifold("empty target".into()))?;
    let s = 0.5 * (hi - lo).norm();
    if !(s > 0.0) {
        return Err(Error::InvalidConfig(
            "target has zero extent; set sigma0".into(),
        ));
    }
    Ok(s)
}

/// Multi-scale LDDMM registration: one L-BFGS stage per entry of the kernel
/// width schedule, starting from zero momenta and passing the optimal momenta
/// of each stage to the next.
pub fn register_lddmm(
    source: &Mesh,
    target: &DiscreteVarifold,
    cfg: &RegistrationConfig,
) -> Result<LddmmOutcome> {
    cfg.validate()?;
    let kernel = DeformationKernel::new(resolve_sigma0(cfg, target)?, cfg.scale_divisors.clone())?;
    let mut p = vec![0.0; 3 * source.num_vertices()];
    let mut stages = Vec::with_capacity(cfg.sigma_w_schedule.len());
    for &sigma_w in &cfg.sigma_w_schedule {
        let start = Instant::now();
        let obj = LddmmObjective::new(source, target, &kernel, cfg, sigma_w)?;
        let out = lbfgs_minimize(
            |x: &[f64]| {
                let (b, g) = obj.value_and_gradient(x)?;
                Ok((b.total, g, b))
            },
            &p,
            &cfg.lbfgs,
        )?;
        log::info!(
            "lddmm sigma_w {sigma_w}: {} iterations, objective {:.6e} -> {:.6e} ({:?})",
            out.iterations,
            out.trace[0].value,
            out.value,
            out.termination
        );
        stages.push(StageReport::from_lbfgs(
            "lddmm",
            Some(sigma_w),
            &out,
            start.elapsed().as_secs_f64(),
        ));
        p = out.x;
    }
    let state = ShootingState {
        control_points: source.vertices().to_vec(),
        momenta: unflatten(&p),
    };
    let traj = shoot(&state, &kernel, cfg.n_steps)?;
    let deformed = source.with_vertices(traj.last().control_points.clone())?;
    Ok(LddmmOutcome {
        state,
        kernel,
        n_steps: cfg.n_steps,
        deformed,
        stages,
    })
}

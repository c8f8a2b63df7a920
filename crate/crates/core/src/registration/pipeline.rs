use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RegistrationConfig;
use super::lddmm::register_lddmm;
use super::report::{ObjectiveBreakdown, StageReport};
use super::rigid::{register_icp_rigid, register_rigid_partial, register_translation};
use crate::deformation::{DeformationKernel, ShootingState};
use crate::error::{Error, Result};
use crate::geometry::{face_elements, Mesh, RigidTransform};
use crate::map::{ComposedMap, SpatialMap};
use crate::varifold::icp_dissimilarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "icp_rigid")]
    IcpRigid,
    #[serde(rename = "rigid_pm")]
    RigidPm,
    #[serde(rename = "translation")]
    Translation,
    #[serde(rename = "rigid_pm+lddmm")]
    RigidPmLddmm,
    #[serde(rename = "translation+lddmm")]
    TranslationLddmm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::IcpRigid,
        Method::RigidPm,
        Method::Translation,
        Method::RigidPmLddmm,
        Method::TranslationLddmm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::IcpRigid => "icp_rigid",
            Method::RigidPm => "rigid_pm",
            Method::Translation => "translation",
            Method::RigidPmLddmm => "rigid_pm+lddmm",
            Method::TranslationLddmm => "translation+lddmm",
        }
    }

    pub fn uses_lddmm(self) -> bool {
        matches!(self, Method::RigidPmLddmm | Method::TranslationLddmm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown method '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Output of [`pipeline`].
#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub method: Method,
    /// Rigid (or translation) stage, mapping the original source.
    pub rigid: Option<RigidTransform>,
    /// LDDMM stage: control points are the vertices of the rigidly placed source.
    pub shooting: Option<(ShootingState, DeformationKernel, usize)>,
    /// All stages in order; maps any point of the source space.
    pub map: ComposedMap,
    pub deformed_source: Mesh,
    pub stages: Vec<StageReport>,
    /// Set when a later stage failed; the fields above then hold the result
    /// of the stages that completed.
    pub failure: Option<String>,
    pub wall_time_s: f64,
}

impl RegistrationResult {
    pub fn converged(&self) -> bool {
        self.failure.is_none() && self.stages.iter().all(|s| s.converged)
    }
}

/// Runs the stages of `method` in order: a rigid or translation stage (each
/// starting with barycenter alignment), then optionally LDDMM from zero
/// momenta on the rigidly placed source.
pub fn pipeline(
    method: Method,
    source: &Mesh,
    target: &Mesh,
    cfg: &RegistrationConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    let start = Instant::now();
    let s_el = face_elements(source)?;
    let t_el = face_elements(target)?;
    let first = match method {
        Method::IcpRigid => register_icp_rigid(&s_el, &t_el, cfg)?,
        Method::RigidPm | Method::RigidPmLddmm => register_rigid_partial(&s_el, &t_el, cfg)?,
        Method::Translation | Method::TranslationLddmm => register_translation(&s_el, &t_el),
    };
    let mut map = ComposedMap::identity();
    map.push(SpatialMap::Rigid {
        transform: first.transform,
    });
    let placed = map.apply_mesh(source)?;
    let mut first_report = first.report;
    if method == Method::IcpRigid {
        // Log the final value on the realized mesh, whose face centers can
        // differ from the moved element centers in the last bit.
        let realized = icp_dissimilarity(&face_elements(&placed)?, &t_el);
        if let Some(last) = first_report.trace.last_mut() {
            last.objective = ObjectiveBreakdown::data_only(realized);
        }
    }
    let mut result = RegistrationResult {
        method,
        rigid: Some(first.transform),
        shooting: None,
        map,
        deformed_source: placed.clone(),
        stages: vec![first_report],
        failure: None,
        wall_time_s: 0.0,
    };
    if method.uses_lddmm() {
        match register_lddmm(&placed, &t_el, cfg) {
            Ok(out) => {
                result.map.push(SpatialMap::Flow {
                    initial: out.state.clone(),
                    kernel: out.kernel.clone(),
                    n_steps: out.n_steps,
                });
                result.deformed_source = out.deformed;
                result.shooting = Some((out.state, out.kernel, out.n_steps));
                result.stages.extend(out.stages);
            }
            Err(e) => {
                log::error!("lddmm stage failed: {e}");
                result.failure = Some(e.to_string());
            }
        }
    }
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

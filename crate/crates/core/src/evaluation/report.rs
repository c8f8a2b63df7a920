use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::landmarks::{LandmarkMetrics, LandmarkRow};
use crate::error::{Error, Result};
use crate::geometry::{DiscreteVarifold, RigidTransform};
use crate::registration::{RegistrationConfig, RegistrationResult, StageReport};
use crate::varifold::icp_dissimilarity;

/// Mean distance from each deformed-source element center to the closest
/// target element center; the same quantity as the ICP dissimilarity.
pub fn surface_metric(deformed: &DiscreteVarifold, target: &DiscreteVarifold) -> f64 {
    icp_dissimilarity(deformed, target)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub surface_distance: Option<f64>,
    pub landmarks: Option<LandmarkMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub converged: bool,
    pub failure: Option<String>,
    pub rigid: Option<RigidTransform>,
    pub sigma0: Option<f64>,
    pub control_points: usize,
    pub source_faces: usize,
}

/// Wall-clock times; the only part of a report that differs between
/// identical runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_s: f64,
    pub stages_s: Vec<f64>,
}

/// Machine-readable record of a registration or evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub method: Option<String>,
    pub config: Option<RegistrationConfig>,
    pub result: Option<ResultSummary>,
    pub stages: Vec<StageReport>,
    pub metrics: Metrics,
    pub timing: Timing,
    /// Written to the CSV companion, not to the JSON document.
    #[serde(skip)]
    pub landmark_rows: Vec<LandmarkRow>,
}

impl Report {
    pub fn new() -> Self {
        Report {
            tool: "varimatch".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            method: None,
            config: None,
            result: None,
            stages: Vec::new(),
            metrics: Metrics::default(),
            timing: Timing::default(),
            landmark_rows: Vec::new(),
        }
    }

    pub fn from_registration(result: &RegistrationResult, cfg: &RegistrationConfig) -> Self {
        let mut r = Report::new();
        r.method = Some(result.method.to_string());
        r.config = Some(cfg.clone());
        r.result = Some(ResultSummary {
            converged: result.converged(),
            failure: result.failure.clone(),
            rigid: result.rigid,
            sigma0: result.shooting.as_ref().map(|(_, k, _)| k.sigma0()),
            control_points: result.shooting.as_ref().map_or(0, |(s, _, _)| s.len()),
            source_faces: result.deformed_source.num_faces(),
        });
        r.stages = result.stages.clone();
        r.timing = Timing {
            total_s: result.wall_time_s,
            stages_s: result.stages.iter().map(|s| s.wall_time_s).collect(),
        };
        r
    }

    /// Path of the landmark CSV written next to the JSON document.
    pub fn csv_path(json_path: &Path) -> PathBuf {
        json_path.with_extension("csv")
    }
}

impl Default for Report {
    fn default() -> Self {
        Self::new()
    }
}

/// Writes the report as pretty JSON to `path` and one CSV row per landmark
/// pair to [`Report::csv_path`].
pub fn emit_report(report: &Report, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
    let csv_path = Report::csv_path(path);
    let csv_err = |e| Error::Csv {
        path: csv_path.clone(),
        source: e,
    };
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    if report.landmark_rows.is_empty() {
        w.write_record([
            "label", "role", "x_a", "y_a", "z_a", "x_b", "y_b", "z_b", "distance",
        ])
        .map_err(csv_err)?;
    }
    for row in &report.landmark_rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))
}

pub fn load_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

//! Landmark and surface distances, landmark transport through registration
//! maps, and JSON/CSV run reports.

mod landmarks;
mod report;

pub use landmarks::{
    landmark_metric, landmark_rows, transport_landmarks, LandmarkMetrics, LandmarkRole,
    LandmarkRow, LandmarkSet, RoleSummary,
};
pub use report::{
    emit_report, load_report, surface_metric, Metrics, Report, ResultSummary, Timing,
};

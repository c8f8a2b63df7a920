use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::ComposedMap;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkRole {
    /// Point of interest, e.g. a vessel bifurcation.
    Poi,
    /// One of the three points annotating a tumor axis (two extremities and the center).
    TumorAxis,
}

impl LandmarkRole {
    pub fn name(self) -> &'static str {
        match self {
            LandmarkRole::Poi => "poi",
            LandmarkRole::TumorAxis => "tumor_axis",
        }
    }
}

impl fmt::Display for LandmarkRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LandmarkRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "poi" => Ok(LandmarkRole::Poi),
            "tumor_axis" => Ok(LandmarkRole::TumorAxis),
            other => Err(Error::InvalidConfig(format!(
                "unknown landmark role '{other}'"
            ))),
        }
    }
}

/// Labelled points with a role each. Labels are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Vec3>,
    labels: Vec<String>,
    roles: Vec<LandmarkRole>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Vec3>, labels: Vec<String>, roles: Vec<LandmarkRole>) -> Result<Self> {
        if points.len() != labels.len() || points.len() != roles.len() {
            return Err(Error::CountMismatch {
                expected: points.len(),
                found: labels.len().min(roles.len()),
            });
        }
        let mut seen = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(Error::InvalidConfig(format!(
                    "landmark label '{l}' repeated (rows {j} and {i})"
                )));
            }
        }
        if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidConfig(
                "landmark coordinates must be finite".into(),
            ));
        }
        Ok(LandmarkSet {
            points,
            labels,
            roles,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn roles(&self) -> &[LandmarkRole] {
        &self.roles
    }

    pub fn with_points(&self, points: Vec<Vec3>) -> Result<Self> {
        LandmarkSet::new(points, self.labels.clone(), self.roles.clone())
    }

    /// Reads `label,x,y,z,role` rows; a leading header row is skipped.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let csv_err = |e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(csv_err)?;
        let (mut points, mut labels, mut roles) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(i + 1, |p| p.line() as usize);
            if rec.len() != 5 {
                return Err(Error::parse(
                    path,
                    line,
                    format!("expected 5 fields, found {}", rec.len()),
                ));
            }
            let coords: std::result::Result<Vec<f64>, _> =
                (1..4).map(|k| rec[k].parse::<f64>()).collect();
            let coords = match coords {
                Ok(c) => c,
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::parse(path, line, format!("bad coordinate: {e}"))),
            };
            let role = rec[4]
                .parse()
                .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            points.push(Vec3::new(coords[0], coords[1], coords[2]));
            labels.push(rec[0].to_string());
            roles.push(role);
        }
        LandmarkSet::new(points, labels, roles)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["label", "x", "y", "z", "role"])
            .map_err(csv_err)?;
        for i in 0..self.len() {
            let p = self.points[i];
            w.write_record([
                self.labels[i].clone(),
                p.x.to_string(),
                p.y.to_string(),
                p.z.to_string(),
                self.roles[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Moves every landmark with `map`; labels and roles are kept.
pub fn transport_landmarks(map: &ComposedMap, lm: &LandmarkSet) -> Result<LandmarkSet> {
    lm.with_points(map.apply_points(lm.points())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSummary {
    pub count: usize,
    pub mean: f64,
}

/// Distances between equally labelled landmarks (mm). `std` is the
/// population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkMetrics {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub per_label: BTreeMap<String, f64>,
    pub per_role: BTreeMap<String, RoleSummary>,
}

/// One matched landmark pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRow {
    pub label: String,
    pub role: LandmarkRole,
    pub x_a: f64,
    pub y_a: f64,
    pub z_a: f64,
    pub x_b: f64,
    pub y_b: f64,
    pub z_b: f64,
    pub distance: f64,
}

/// Pairs landmarks by label, in the order of `a`.
pub fn landmark_rows(a: &LandmarkSet, b: &LandmarkSet) -> Result<Vec<LandmarkRow>> {
    let index: HashMap<&str, usize> = b
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let only_a: Vec<&str> = a
        .labels
        .iter()
        .map(String::as_str)
        .filter(|l| !index.contains_key(l))
        .collect();
    let in_a: std::collections::HashSet<&str> = a.labels.iter().map(String::as_str).collect();
    let only_b: Vec<&str> = b
        .labels
        .iter()
        .map(String::as_str)
        .filter(|l| !in_a.contains(l))
        .collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(Error::LabelMismatch {
            only_a: only_a.join(", "),
            only_b: only_b.join(", "),
        });
    }
    Ok((0..a.len())
        .map(|i| {
            let j = index[a.labels[i].as_str()];
            let (pa, pb) = (a.points[i], b.points[j]);
            LandmarkRow {
                label: a.labels[i].clone(),
                role: a.roles[i],
                x_a: pa.x,
                y_a: pa.y,
                z_a: pa.z,
                x_b: pb.x,
                y_b: pb.y,
                z_b: pb.z,
                distance: (pa - pb).norm(),
            }
        })
        .collect())
}

/// Summary statistics of [`landmark_rows`]. Symmetric in its arguments.
pub fn landmark_metric(a: &LandmarkSet, b: &LandmarkSet) -> Result<LandmarkMetrics> {
    Ok(summarize(&landmark_rows(a, b)?))
}

pub(crate) fn summarize(rows: &[LandmarkRow]) -> LandmarkMetrics {
    // order-independent sums so the metric is symmetric
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = if n == 0 {
        0.0
    } else {
        sorted.iter().sum::<f64>() / n as f64
    };
    let var = if n == 0 {
        0.0
    } else {
        sorted.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64
    };
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => sorted[n / 2],
        _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    };
    let per_label = rows.iter().map(|r| (r.label.clone(), r.distance)).collect();
    let mut per_role: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        per_role
            .entry(r.role.to_string())
            .or_default()
            .push(r.distance);
    }
    let per_role = per_role
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(f64::total_cmp);
            let count = v.len();
            (
                k,
                RoleSummary {
                    count,
                    mean: v.iter().sum::<f64>() / count as f64,
                },
            )
        })
        .collect();
    LandmarkMetrics {
        count: n,
        mean,
        std: var.sqrt(),
        median,
        per_label,
        per_role,
    }
}

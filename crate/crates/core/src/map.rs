//! Ambient maps produced by registration stages, usable on any point set.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::deformation::{flow_points, DeformationKernel, ShootingState};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, RigidTransform};
use crate::Vec3;

/// One stage of a registration pipeline viewed as a map of space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpatialMap {
    Rigid {
        transform: RigidTransform,
    },
    Flow {
        initial: ShootingState,
        kernel: DeformationKernel,
        n_steps: usize,
    },
}

impl SpatialMap {
    pub fn apply_points(&self, points: &[Vec3]) -> Result<Vec<Vec3>> {
        match self {
            SpatialMap::Rigid { transform } => {
                Ok(points.iter().map(|p| transform.apply_point(p)).collect())
            }
            SpatialMap::Flow {
                initial,
                kernel,
                n_steps,
            } => flow_points(initial, kernel, *n_steps, points),
        }
    }
}

/// Stages applied in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComposedMap {
    pub stages: Vec<SpatialMap>,
}

impl ComposedMap {
    pub fn identity() -> Self {
        ComposedMap::default()
    }

    pub fn push(&mut self, stage: SpatialMap) {
        self.stages.push(stage);
    }

    pub fn apply_points(&self, points: &[Vec3]) -> Result<Vec<Vec3>> {
        let mut cur = points.to_vec();
        for s in &self.stages {
            cur = s.apply_points(&cur)?;
        }
        Ok(cur)
    }

    pub fn apply_mesh(&self, mesh: &Mesh) -> Result<Mesh> {
        mesh.with_vertices(self.apply_points(mesh.vertices())?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

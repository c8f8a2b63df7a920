use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernel::DeformationKernel;
use super::shooting::{hamiltonian_field, velocity_at, FlowTrajectory, ShootingState};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, DEGENERATE_AREA};
use crate::Vec3;

/// Largest grid [`deform_grid`] accepts by default.
pub const DEFAULT_GRID_NODE_CAP: usize = 64_000_000;

fn passive_velocity(x: &[Vec3], q: &[Vec3], p: &[Vec3], kernel: &DeformationKernel) -> Vec<Vec3> {
    use rayon::prelude::*;
    x.par_iter()
        .map(|xi| velocity_at(xi, q, p, kernel))
        .collect()
}

fn axpy(base: &[Vec3], step: f64, dir: &[Vec3]) -> Vec<Vec3> {
    base.iter().zip(dir).map(|(b, d)| b + d * step).collect()
}

fn combine(base: &[Vec3], h: f64, k: [&[Vec3]; 4]) -> Vec<Vec3> {
    (0..base.len())
        .map(|i| base[i] + (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (h / 6.0))
        .collect()
}

/// Transports `points` along the flow generated by `initial`, integrating the
/// control points, momenta and points jointly with the same RK4 scheme as
/// [`shoot`](super::shoot). A point placed on a control point follows it exactly.
pub fn flow_points(
    initial: &ShootingState,
    kernel: &DeformationKernel,
    n_steps: usize,
    points: &[Vec3],
) -> Result<Vec<Vec3>> {
    flow_points_interval(initial, kernel, n_steps, 1.0, points)
}

fn flow_points_interval(
    initial: &ShootingState,
    kernel: &DeformationKernel,
    n_steps: usize,
    duration: f64,
    points: &[Vec3],
) -> Result<Vec<Vec3>> {
    if n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
    }
    let h = duration / n_steps as f64;
    let mut q = initial.control_points.clone();
    let mut p = initial.momenta.clone();
    let mut x = points.to_vec();
    for step in 0..n_steps {
        let (dq1, dp1) = hamiltonian_field(&q, &p, kernel);
        let dx1 = passive_velocity(&x, &q, &p, kernel);
        let (q2, p2, x2) = (
            axpy(&q, 0.5 * h, &dq1),
            axpy(&p, 0.5 * h, &dp1),
            axpy(&x, 0.5 * h, &dx1),
        );
        let (dq2, dp2) = hamiltonian_field(&q2, &p2, kernel);
        let dx2 = passive_velocity(&x2, &q2, &p2, kernel);
        let (q3, p3, x3) = (
            axpy(&q, 0.5 * h, &dq2),
            axpy(&p, 0.5 * h, &dp2),
            axpy(&x, 0.5 * h, &dx2),
        );
        let (dq3, dp3) = hamiltonian_field(&q3, &p3, kernel);
        let dx3 = passive_velocity(&x3, &q3, &p3, kernel);
        let (q4, p4, x4) = (axpy(&q, h, &dq3), axpy(&p, h, &dp3), axpy(&x, h, &dx3));
        let (dq4, dp4) = hamiltonian_field(&q4, &p4, kernel);
        let dx4 = passive_velocity(&x4, &q4, &p4, kernel);
        q = combine(&q, h, [&dq1, &dq2, &dq3, &dq4]);
        p = combine(&p, h, [&dp1, &dp2, &dp3, &dp4]);
        x = combine(&x, h, [&dx1, &dx2, &dx3, &dx4]);
        let finite = |v: &[Vec3]| v.iter().all(|a| a.iter().all(|c| c.is_finite()));
        if !(finite(&q) && finite(&p) && finite(&x)) {
            return Err(Error::Divergence { step: step + 1 });
        }
    }
    Ok(x)
}

/// [`flow_points`] using the initial state, step count and duration of a trajectory.
pub fn flow_points_along(
    trajectory: &FlowTrajectory,
    kernel: &DeformationKernel,
    points: &[Vec3],
) -> Result<Vec<Vec3>> {
    flow_points_interval(
        trajectory.initial(),
        kernel,
        trajectory.n_steps,
        trajectory.duration,
        points,
    )
}

/// Moves every vertex of `mesh` with the flow; connectivity is unchanged.
/// Faces that collapse below the degenerate-area threshold are logged.
pub fn deform_mesh(
    mesh: &Mesh,
    initial: &ShootingState,
    kernel: &DeformationKernel,
    n_steps: usize,
) -> Result<Mesh> {
    let moved = flow_points(initial, kernel, n_steps, mesh.vertices())?;
    let out = mesh.with_vertices(moved)?;
    let degenerate = out.degenerate_faces(DEGENERATE_AREA);
    if !degenerate.is_empty() {
        log::warn!(
            "{} faces became degenerate under the deformation (first: {})",
            degenerate.len(),
            degenerate[0]
        );
    }
    Ok(out)
}

/// Regular grid with `x` varying fastest, then `y`, then `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub shape: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: [f64; 3], spacing: [f64; 3], shape: [usize; 3]) -> Result<Self> {
        if spacing.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || origin.iter().any(|o| !o.is_finite())
        {
            return Err(Error::InvalidConfig(
                "grid spacing must be positive and finite".into(),
            ));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidConfig("grid shape must be non-empty".into()));
        }
        Ok(GridSpec {
            origin,
            spacing,
            shape,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        )
    }

    /// All nodes in storage order.
    pub fn nodes(&self) -> Vec<Vec3> {
        let [nx, ny, nz] = self.shape;
        let mut out = Vec::with_capacity(self.num_nodes());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.push(self.node(i, j, k));
                }
            }
        }
        out
    }
}

/// Displacement `φ(x) - x` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub grid: GridSpec,
    pub displacements: Vec<Vec3>,
}

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    origin: [f64; 3],
    spacing: [f64; 3],
    shape: [usize; 3],
    order: String,
    components: usize,
    dtype: String,
}

const ORDER: &str = "x-fastest";
const DTYPE: &str = "float64-le";

impl DisplacementField {
    /// Writes the raw little-endian `f64` triples to `path` and a JSON header
    /// to `path` with `.json` appended.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.displacements.len() * 24);
        for d in &self.displacements {
            for c in d.iter() {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        let header = FieldHeader {
            origin: self.grid.origin,
            spacing: self.grid.spacing,
            shape: self.grid.shape,
            order: ORDER.into(),
            components: 3,
            dtype: DTYPE.into(),
        };
        let hp = Self::header_path(path);
        let text = serde_json::to_string_pretty(&header).map_err(|e| Error::Json {
            path: hp.clone(),
            source: e,
        })?;
        std::fs::write(&hp, text).map_err(|e| Error::io(&hp, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let hp = Self::header_path(path);
        let text = std::fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?;
        let header: FieldHeader = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: hp.clone(),
            source: e,
        })?;
        if header.order != ORDER || header.dtype != DTYPE || header.components != 3 {
            return Err(Error::parse(&hp, 1, "unsupported displacement layout"));
        }
        let grid = GridSpec::new(header.origin, header.spacing, header.shape)?;
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        if bytes.len() != grid.num_nodes() * 24 {
            return Err(Error::CountMismatch {
                expected: grid.num_nodes() * 24,
                found: bytes.len(),
            });
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let displacements = vals
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect();
        Ok(DisplacementField {
            grid,
            displacements,
        })
    }

    pub fn header_path(path: &Path) -> std::path::PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        s.into()
    }
}

/// Samples the displacement of the flow on every node of `grid`.
pub fn deform_grid(
    grid: &GridSpec,
    initial: &ShootingState,
    kernel: &DeformationKernel,
    n_steps: usize,
    node_cap: usize,
) -> Result<DisplacementField> {
    let nodes = grid.num_nodes();
    if nodes > node_cap {
        return Err(Error::GridTooLarge {
            nodes,
            cap: node_cap,
        });
    }
    let start = grid.nodes();
    let end = flow_points(initial, kernel, n_steps, &start)?;
    let displacements = end.iter().zip(&start).map(|(e, s)| e - s).collect();
    Ok(DisplacementField {
        grid: grid.clone(),
        displacements,
    })
}

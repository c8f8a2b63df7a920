//! Shared helpers for the integration tests: random shapes and brute-force
//! reference implementations written directly from the formulas, without
//! touching the library's kernel code.

#![allow(dead_code)]

use rand::Rng;
use varimatch::geometry::{DiscreteVarifold, Mesh, RigidTransform};
use varimatch::Vec3;

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
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

pub fn random_varifold<R: Rng>(rng: &mut R, n: usize, extent: f64) -> DiscreteVarifold {
    let centers = (0..n)
        .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()) * extent)
        .collect();
    let directors = (0..n).map(|_| random_unit(rng)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
    DiscreteVarifold::new(centers, directors, weights).unwrap()
}

pub fn random_rigid<R: Rng>(rng: &mut R, max_deg: f64, max_shift: f64) -> RigidTransform {
    let mut a = || rng.gen_range(-max_deg..=max_deg);
    let angles = [a(), a(), a()];
    let mut t = || rng.gen_range(-max_shift..=max_shift);
    RigidTransform::new(angles, Vec3::new(t(), t(), t()))
}

/// Small perturbation of every element (centers, directions and weights).
pub fn jitter<R: Rng>(rng: &mut R, v: &DiscreteVarifold, amount: f64) -> DiscreteVarifold {
    let centers = v
        .centers()
        .iter()
        .map(|c| c + Vec3::new(rng.gen(), rng.gen(), rng.gen()) * amount)
        .collect();
    let directors = v
        .directors()
        .iter()
        .map(|d| (d + random_unit(rng) * amount * 0.2).normalize())
        .collect();
    let weights = v
        .weights()
        .iter()
        .map(|w| w * (1.0 + rng.gen_range(-amount..amount) * 0.2))
        .collect();
    DiscreteVarifold::new(centers, directors, weights).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Triangulated 2 x 5 vertex strip on a gently curved sheet (10 vertices,
/// 8 faces), consistently wound.
pub fn small_patch(spacing: f64, offset: Vec3) -> Mesh {
    let mut vertices = Vec::new();
    for j in 0..2 {
        for i in 0..5 {
            let (x, y) = (i as f64 * spacing, j as f64 * spacing);
            vertices.push(Vec3::new(x, y, 0.03 * (x * x + y * y)) + offset);
        }
    }
    let mut faces = Vec::new();
    for i in 0..4 {
        faces.push([i, i + 1, i + 6]);
        faces.push([i, i + 6, i + 5]);
    }
    Mesh::new(vertices, faces).unwrap()
}

pub mod oracle {
    use varimatch::geometry::DiscreteVarifold;

    fn k(s: &DiscreteVarifold, i: usize, t: &DiscreteVarifold, j: usize, sigma: f64) -> f64 {
        let dx = s.centers()[i] - t.centers()[j];
        let d2 = dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2];
        let u = s.directors()[i];
        let v = t.directors()[j];
        let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        (-d2 / (sigma * sigma)).exp() * dot.exp()
    }

    pub fn representer(at: &DiscreteVarifold, of: &DiscreteVarifold, sigma: f64) -> Vec<f64> {
        let mut out = vec![0.0; at.len()];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..of.len() {
                *o += k(at, i, of, j, sigma) * at.weights()[i] * of.weights()[j];
            }
        }
        out
    }

    pub fn inner(s: &DiscreteVarifold, t: &DiscreteVarifold, sigma: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..s.len() {
            for j in 0..t.len() {
                acc += k(s, i, t, j, sigma) * s.weights()[i] * t.weights()[j];
            }
        }
        acc
    }

    pub fn distance_sq(s: &DiscreteVarifold, t: &DiscreteVarifold, sigma: f64) -> f64 {
        inner(s, s, sigma) - 2.0 * inner(s, t, sigma) + inner(t, t, sigma)
    }

    pub fn min_eps(s: f64, eps: f64) -> f64 {
        (s + 1.0 - (eps + (s - 1.0).powi(2)).sqrt()) / 2.0
    }

    pub fn partial(s: &DiscreteVarifold, t: &DiscreteVarifold, sigma: f64, eps: f64) -> f64 {
        let ws = representer(s, s, sigma);
        let wt = representer(t, t, sigma);
        let mut total = 0.0;
        for i in 0..s.len() {
            let mut covered = 0.0;
            for l in 0..t.len() {
                covered += min_eps(ws[i] / wt[l], eps) * k(s, i, t, l, sigma);
            }
            let r = ws[i] - covered;
            total += if r > 0.0 { r * r } else { 0.0 };
        }
        total
    }

    pub fn reg_global(s: &DiscreteVarifold, d: &DiscreteVarifold, sigma: f64) -> f64 {
        let a: f64 = representer(s, s, sigma).iter().sum();
        let b: f64 = representer(d, d, sigma).iter().sum();
        (a - b).powi(2)
    }

    pub fn reg_local(s: &DiscreteVarifold, d: &DiscreteVarifold, sigma: f64) -> f64 {
        let a = representer(s, s, sigma);
        let b = representer(d, d, sigma);
        (0..s.len())
            .map(|i| (a[i] - b[i] * d.weights()[i] / s.weights()[i]).powi(2))
            .sum()
    }
}

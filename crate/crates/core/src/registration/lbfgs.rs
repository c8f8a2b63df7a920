use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Limited-memory BFGS settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub memory: usize,
    /// Stop when `|g| <= grad_tol * |g0|`.
    pub grad_tol: f64,
    /// Stop when `|g| <= abs_grad_tol`, regardless of `|g0|`.
    pub abs_grad_tol: f64,
    /// Sufficient-decrease constant of the strong Wolfe conditions.
    pub c1: f64,
    /// Curvature constant of the strong Wolfe conditions.
    pub c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iters: 500,
            memory: 10,
            grad_tol: 1e-6,
            abs_grad_tol: 1e-300,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

impl LbfgsOptions {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::InvalidConfig(
                "lbfgs memory must be at least 1".into(),
            ));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidConfig(
                "lbfgs requires 0 < c1 < c2 < 1".into(),
            ));
        }
        if !(self.grad_tol >= 0.0 && self.abs_grad_tol >= 0.0) {
            return Err(Error::InvalidConfig(
                "lbfgs tolerances must be non-negative".into(),
            ));
        }
        if self.max_line_search == 0 {
            return Err(Error::InvalidConfig(
                "max_line_search must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Gradient is zero at the starting point.
    ZeroGradient,
    GradientTolerance,
    MaxIterations,
    /// The line search failed twice in a row, once after a memory reset.
    LineSearchFailure,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(
            self,
            Termination::ZeroGradient | Termination::GradientTolerance
        )
    }
}

/// One accepted iterate (iteration 0 is the starting point).
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord<I> {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub evaluations: usize,
    pub info: I,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome<I> {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub trace: Vec<IterRecord<I>>,
}

struct Point<I> {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
    info: I,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizer of the cubic interpolating `(a, fa, da)` and `(b, fb, db)`, if
/// it exists.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

struct LineSearch<'a, I, F> {
    f: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    d0: f64,
    opts: &'a LbfgsOptions,
    evals: usize,
    /// Lowest-valued point seen that satisfies sufficient decrease.
    best: Option<Point<I>>,
}

impl<I, F> LineSearch<'_, I, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, I)>,
{
    fn eval(&mut self, alpha: f64) -> Option<Point<I>> {
        self.evals += 1;
        let x: Vec<f64> = self
            .x
            .iter()
            .zip(self.d)
            .map(|(xi, di)| xi + alpha * di)
            .collect();
        match (self.f)(&x) {
            Ok((f, g, info)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => {
                let dphi = dot(&g, self.d);
                Some(Point {
                    alpha,
                    x,
                    f,
                    g,
                    dphi,
                    info,
                })
            }
            _ => None,
        }
    }

    fn armijo(&self, p: &Point<I>) -> bool {
        p.f <= self.f0 + self.opts.c1 * p.alpha * self.d0
    }

    fn curvature(&self, p: &Point<I>) -> bool {
        p.dphi.abs() <= -self.opts.c2 * self.d0
    }

    fn remember(&mut self, p: &Point<I>)
    where
        I: Clone,
    {
        if self.armijo(p) && self.best.as_ref().is_none_or(|b| p.f < b.f) {
            self.best = Some(Point {
                alpha: p.alpha,
                x: p.x.clone(),
                f: p.f,
                g: p.g.clone(),
                dphi: p.dphi,
                info: p.info.clone(),
            });
        }
    }

    /// Strong Wolfe search starting at `alpha`.
    fn run(&mut self, mut alpha: f64) -> Option<Point<I>>
    where
        I: Clone,
    {
        let mut prev: Option<Point<I>> = None;
        let mut upper = f64::INFINITY;
        while self.evals < self.opts.max_line_search {
            let Some(p) = self.eval(alpha) else {
                // non-finite: step too long
                upper = alpha;
                let lo = prev.as_ref().map_or(0.0, |q| q.alpha);
                alpha = 0.5 * (lo + alpha);
                continue;
            };
            self.remember(&p);
            let prev_f = prev.as_ref().map_or(self.f0, |q| q.f);
            if !self.armijo(&p) || (prev.is_some() && p.f >= prev_f) {
                return self.zoom(prev, p);
            }
            if self.curvature(&p) {
                return Some(p);
            }
            if p.dphi >= 0.0 {
                return self.zoom(Some(p), prev.map_or(Bound::Origin, Bound::Point));
            }
            let next = if upper.is_finite() {
                0.5 * (p.alpha + upper)
            } else {
                2.0 * p.alpha
            };
            prev = Some(p);
            alpha = next;
        }
        None
    }

    fn zoom(&mut self, lo: Option<Point<I>>, hi: impl Into<Bound<I>>) -> Option<Point<I>>
    where
        I: Clone,
    {
        let mut lo = lo.map_or(Bound::Origin, Bound::Point);
        let mut hi: Bound<I> = hi.into();
        while self.evals < self.opts.max_line_search {
            let (a, fa, da) = self.abscissa(&lo);
            let (b, fb, db) = self.abscissa(&hi);
            let width = (b - a).abs();
            if width <= 1e-14 * a.abs().max(b.abs()) || width == 0.0 {
                return None;
            }
            let (left, right) = (a.min(b), a.max(b));
            let guard = 0.1 * width;
            let mut t = match (fb.is_finite(), cubic_min(a, fa, da, b, fb, db)) {
                (true, Some(t)) => t,
                _ => 0.5 * (a + b),
            };
            if !(t > left + guard && t < right - guard) {
                t = 0.5 * (a + b);
            }
            let Some(p) = self.eval(t) else {
                hi = Bound::Infinite(t);
                continue;
            };
            self.remember(&p);
            if !self.armijo(&p) || p.f >= fa {
                hi = Bound::Point(p);
            } else {
                if self.curvature(&p) {
                    return Some(p);
                }
                if p.dphi * (b - a) >= 0.0 {
                    hi = lo;
                }
                lo = Bound::Point(p);
            }
        }
        None
    }

    fn abscissa(&self, b: &Bound<I>) -> (f64, f64, f64) {
        match b {
            Bound::Origin => (0.0, self.f0, self.d0),
            Bound::Point(p) => (p.alpha, p.f, p.dphi),
            Bound::Infinite(a) => (*a, f64::INFINITY, f64::NAN),
        }
    }
}

enum Bound<I> {
    Origin,
    Point(Point<I>),
    Infinite(f64),
}

impl<I> From<Point<I>> for Bound<I> {
    fn from(p: Point<I>) -> Self {
        Bound::Point(p)
    }
}

/// Minimizes `f` from `x0`. `f` returns the value, the gradient and an
/// arbitrary payload stored in the trace for every accepted iterate.
/// Evaluation errors and non-finite values are treated as an overly long step.
///
/// On line-search failure the curvature memory is discarded and a
/// steepest-descent search is tried; a second failure ends the run at the best
/// point found, which never has a higher value than the last accepted iterate.
pub fn lbfgs_minimize<I, F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> Result<LbfgsOutcome<I>>
where
    I: Clone,
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, I)>,
{
    opts.validate()?;
    let (mut fx, mut g, info) = f(x0)?;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "objective is not finite at the starting point".into(),
        ));
    }
    let mut x = x0.to_vec();
    let g0 = norm(&g);
    let mut gnorm = g0;
    let mut evaluations = 1;
    let mut trace = vec![IterRecord {
        iter: 0,
        value: fx,
        grad_norm: gnorm,
        evaluations,
        info,
    }];
    let done = |gn: f64| gn <= opts.grad_tol * g0 || gn <= opts.abs_grad_tol;
    let finish = |x, value, grad_norm, iterations, evaluations, termination, trace| {
        Ok(LbfgsOutcome {
            x,
            value,
            grad_norm,
            iterations,
            evaluations,
            termination,
            trace,
        })
    };
    if g0 == 0.0 {
        return finish(x, fx, 0.0, 0, evaluations, Termination::ZeroGradient, trace);
    }

    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut just_reset = false;
    let mut iter = 0;
    while iter < opts.max_iters {
        if done(gnorm) {
            return finish(
                x,
                fx,
                gnorm,
                iter,
                evaluations,
                Termination::GradientTolerance,
                trace,
            );
        }
        let d = two_loop(&g, &mem);
        let mut d0 = dot(&g, &d);
        let (d, alpha0) = if d0 < 0.0 && !mem.is_empty() {
            (d, 1.0)
        } else {
            mem.clear();
            let sd: Vec<f64> = g.iter().map(|v| -v).collect();
            d0 = -gnorm * gnorm;
            (sd, (1.0 / gnorm).min(1.0))
        };
        let mut ls = LineSearch {
            f: &mut f,
            x: &x,
            d: &d,
            f0: fx,
            d0,
            opts,
            evals: 0,
            best: None,
        };
        let found = ls.run(alpha0);
        let best = ls.best.take();
        evaluations += ls.evals;
        let p = match found {
            Some(p) => p,
            None if !just_reset && !mem.is_empty() => {
                log::debug!("line search failed at iteration {iter}; resetting memory");
                mem.clear();
                just_reset = true;
                continue;
            }
            None => {
                if let Some(b) = best.filter(|b| b.f < fx) {
                    iter += 1;
                    let gn = norm(&b.g);
                    trace.push(IterRecord {
                        iter,
                        value: b.f,
                        grad_norm: gn,
                        evaluations,
                        info: b.info,
                    });
                    return finish(
                        b.x,
                        b.f,
                        gn,
                        iter,
                        evaluations,
                        Termination::LineSearchFailure,
                        trace,
                    );
                }
                return finish(
                    x,
                    fx,
                    gnorm,
                    iter,
                    evaluations,
                    Termination::LineSearchFailure,
                    trace,
                );
            }
        };
        just_reset = false;
        let s: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        iter += 1;
        x = p.x;
        fx = p.f;
        g = p.g;
        gnorm = norm(&g);
        trace.push(IterRecord {
            iter,
            value: fx,
            grad_norm: gnorm,
            evaluations,
            info: p.info,
        });
    }
    let termination = if done(gnorm) {
        Termination::GradientTolerance
    } else {
        Termination::MaxIterations
    };
    finish(x, fx, gnorm, iter, evaluations, termination, trace)
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

//! Box-constrained limited-memory BFGS with a projected backtracking search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsOptions {
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Maximum number of accepted steps.
    pub max_iter: usize,
    /// Stop when `|f_k - f_{k+1}| < f_tol`.
    pub f_tol: f64,
    /// Stop when the projected gradient's max-norm drops below this.
    pub pg_tol: f64,
    /// Backtracking halvings allowed per line search.
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 2000,
            f_tol: 1e-8,
            pg_tol: 1e-10,
            max_backtracks: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FunctionTolerance,
    ProjectedGradient,
    MaxIterations,
    LineSearchFailed,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::FunctionTolerance | StopReason::ProjectedGradient)
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
}

/// Componentwise box `[lower_i, upper_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::InvalidArgument(
                "every lower bound must not exceed its upper bound".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    /// Zeroes gradient components that point out of the box at an active bound.
    fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(g)
            .zip(self.lower.iter().zip(&self.upper))
            .map(|((&xi, &gi), (&lo, &hi))| {
                if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Two-loop recursion: approximates `-H g` from the stored pairs.
fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Minimises `fg` (returning value and gradient) over `bounds` starting from `x0`.
///
/// `on_accept(x, f)` runs once for the starting point and after every accepted step.
pub fn minimize<F, C>(mut fg: F, x0: &[f64], bounds: &Bounds, opts: &LbfgsOptions, mut on_accept: C) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(&[f64], f64) -> Result<()>,
{
    if x0.len() != bounds.dim() {
        return Err(Error::DimensionMismatch {
            expected: bounds.dim(),
            got: x0.len(),
        });
    }
    if opts.memory == 0 || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("memory and max_iter must be positive".into()));
    }
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let (mut f, mut g) = fg(&x)?;
    let mut evaluations = 1;
    if !f.is_finite() {
        return Err(Error::NonFinite("objective at the starting point"));
    }
    on_accept(&x, f)?;

    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;
    let reason = loop {
        let pg = bounds.projected_gradient(&x, &g);
        if max_abs(&pg) < opts.pg_tol {
            break StopReason::ProjectedGradient;
        }
        if iterations >= opts.max_iter {
            break StopReason::MaxIterations;
        }

        let mut accepted = None;
        // second pass falls back to steepest descent with a fresh memory
        for attempt in 0..2 {
            let mut d = if pairs.is_empty() || attempt == 1 {
                pg.iter().map(|v| -v).collect()
            } else {
                two_loop(&g, &pairs)
            };
            for (i, di) in d.iter_mut().enumerate() {
                if pg[i] == 0.0 {
                    *di = 0.0;
                }
            }
            if dot(&d, &g) >= 0.0 {
                d = pg.iter().map(|v| -v).collect();
            }
            let mut step = if pairs.is_empty() || attempt == 1 {
                (1.0 / max_abs(&d)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..opts.max_backtracks {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
                bounds.project(&mut trial);
                let delta: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
                let decrease = dot(&g, &delta);
                if decrease >= 0.0 {
                    step *= 0.5;
                    continue;
                }
                let (ft, gt) = fg(&trial)?;
                evaluations += 1;
                if ft.is_finite() && ft <= f + 1e-4 * decrease {
                    accepted = Some((trial, ft, gt, delta));
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            pairs.clear();
        }

        let Some((xn, fnew, gn, s)) = accepted else {
            break StopReason::LineSearchFailed;
        };
        iterations += 1;
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let df = (f - fnew).abs();
        x = xn;
        f = fnew;
        g = gn;
        on_accept(&x, f)?;
        if df < opts.f_tol {
            break StopReason::FunctionTolerance;
        }
    };

    Ok(Minimum {
        x,
        f,
        iterations,
        evaluations,
        reason,
    })
}

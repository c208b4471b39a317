//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! With box bounds the iteration switches to a projected variant: the search
//! direction is masked at active bounds and steps follow the projected path
//! with an Armijo backtracking rule.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Infinity norm of the projected gradient.
    pub grad_tol: f64,
    /// Relative decrease between iterations.
    pub f_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-9,
            f_tol: 1e-12,
            max_iters: 2000,
            memory: 10,
            bounds: None,
        }
    }
}

impl MinimizeOptions {
    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeStatus {
    ConvergedGrad,
    ConvergedF,
    MaxIters,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    pub grad_norm: f64,
    pub status: MinimizeStatus,
    pub n_evals: usize,
    pub n_iters: usize,
    /// Objective value at every accepted iterate, starting with `x0`.
    pub f_history: Vec<f64>,
}

impl MinimizeResult {
    pub fn converged(&self) -> bool {
        matches!(
            self.status,
            MinimizeStatus::ConvergedGrad | MinimizeStatus::ConvergedF
        )
    }
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F> Counter<F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evals += 1;
        (self.f)(x)
    }
}

fn project(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
            *xi = xi.clamp(lo, hi);
        }
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: Option<&[(f64, f64)]>) -> f64 {
    match bounds {
        None => inf_norm(g),
        Some(b) => x
            .iter()
            .zip(g)
            .zip(b)
            .map(|((&xi, &gi), &(lo, hi))| ((xi - gi).clamp(lo, hi) - xi).abs())
            .fold(0.0, f64::max),
    }
}

/// Two-loop recursion: `-H g` from the stored curvature pairs.
fn lbfgs_direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

struct Point {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Cubic interpolation of the minimiser between two bracketing points,
/// safeguarded to the interior of the interval.
fn cubic_step(a: &Point, b: &Point) -> f64 {
    let d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    let (lo, hi) = if a.alpha < b.alpha {
        (a.alpha, b.alpha)
    } else {
        (b.alpha, a.alpha)
    };
    let mid = 0.5 * (lo + hi);
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if !t.is_finite() || t < lo + margin || t > hi - margin {
        mid
    } else {
        t
    }
}

enum Search {
    Accepted(Point),
    Failed(Option<Point>),
}

fn strong_wolfe<F>(
    counter: &mut Counter<F>,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    d: &[f64],
    alpha_init: f64,
) -> Result<Search>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut trial = vec![0.0; x.len()];
    let mut evaluate = |counter: &mut Counter<F>, alpha: f64| -> Result<Point> {
        for ((t, xi), di) in trial.iter_mut().zip(x).zip(d) {
            *t = xi + alpha * di;
        }
        let (f, g) = counter.eval(&trial)?;
        let dphi = dot(&g, d);
        Ok(Point { alpha, f, g, dphi })
    };
    let armijo = |p: &Point| p.f.is_finite() && p.f <= f0 + C1 * p.alpha * dphi0;
    let mut best: Option<Point> = None;
    let remember = |best: &mut Option<Point>, p: &Point| {
        if armijo(p) && p.f < f0 && best.as_ref().is_none_or(|b| p.f < b.f) {
            *best = Some(Point {
                alpha: p.alpha,
                f: p.f,
                g: p.g.clone(),
                dphi: p.dphi,
            });
        }
    };

    let mut prev = Point {
        alpha: 0.0,
        f: f0,
        g: Vec::new(),
        dphi: dphi0,
    };
    let mut alpha = alpha_init;
    let mut evals = 0;
    let (mut lo, mut hi) = loop {
        if evals >= MAX_LINE_EVALS {
            return Ok(Search::Failed(best));
        }
        let p = evaluate(counter, alpha)?;
        evals += 1;
        remember(&mut best, &p);
        if !armijo(&p) || (evals > 1 && p.f >= prev.f) {
            break (prev, p);
        }
        if p.dphi.abs() <= -C2 * dphi0 {
            return Ok(Search::Accepted(p));
        }
        if p.dphi >= 0.0 {
            break (p, prev);
        }
        alpha = 2.0 * p.alpha;
        prev = p;
    };

    // zoom: `lo` satisfies sufficient decrease and has the lower value
    while evals < MAX_LINE_EVALS {
        if (hi.alpha - lo.alpha).abs() <= 1e-14 * lo.alpha.abs().max(1e-10) {
            break;
        }
        let a = if hi.f.is_finite() {
            cubic_step(&lo, &hi)
        } else {
            0.5 * (lo.alpha + hi.alpha)
        };
        let p = evaluate(counter, a)?;
        evals += 1;
        remember(&mut best, &p);
        if !armijo(&p) || p.f >= lo.f {
            hi = p;
        } else {
            if p.dphi.abs() <= -C2 * dphi0 {
                return Ok(Search::Accepted(p));
            }
            if p.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    Ok(Search::Failed(best))
}

/// Projected Armijo backtracking for the bounded case.
fn projected_backtrack<F>(
    counter: &mut Counter<F>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    bounds: &[(f64, f64)],
) -> Result<Option<(Vec<f64>, f64, Vec<f64>)>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut alpha = 1.0;
    for _ in 0..MAX_LINE_EVALS {
        let mut trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        project(&mut trial, Some(bounds));
        let step: Vec<f64> = trial.iter().zip(x).map(|(t, xi)| t - xi).collect();
        let decrease = dot(g0, &step);
        if decrease >= 0.0 {
            alpha *= 0.5;
            continue;
        }
        let (f, g) = counter.eval(&trial)?;
        if f.is_finite() && f <= f0 + C1 * decrease {
            return Ok(Some((trial, f, g)));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

/// Minimises `objective`, which returns the value and gradient at a point.
pub fn minimize<F>(objective: F, x0: &[f64], options: &MinimizeOptions) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let bounds = options.bounds.as_deref();
    let mut counter = Counter {
        f: objective,
        evals: 0,
    };
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let (mut f, mut g) = counter.eval(&x)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut status = MinimizeStatus::MaxIters;
    let mut iters = 0;
    let mut f_history = vec![f];

    if projected_gradient_norm(&x, &g, bounds) < options.grad_tol {
        status = MinimizeStatus::ConvergedGrad;
    } else {
        while iters < options.max_iters {
            iters += 1;
            let mut d = lbfgs_direction(&g, &history);
            if let Some(b) = bounds {
                mask_active(&mut d, &x, b);
            }
            if dot(&g, &d) >= 0.0 {
                history.clear();
                d = g.iter().map(|v| -v).collect();
                if let Some(b) = bounds {
                    mask_active(&mut d, &x, b);
                }
            }

            let step = match bounds {
                None => {
                    let alpha_init = if history.is_empty() {
                        (1.0 / inf_norm(&d)).min(1.0)
                    } else {
                        1.0
                    };
                    match strong_wolfe(&mut counter, &x, f, dot(&g, &d), &d, alpha_init)? {
                        Search::Accepted(p) | Search::Failed(Some(p)) => Some((
                            x.iter().zip(&d).map(|(xi, di)| xi + p.alpha * di).collect::<Vec<_>>(),
                            p.f,
                            p.g,
                        )),
                        Search::Failed(None) => None,
                    }
                }
                Some(b) => projected_backtrack(&mut counter, &x, f, &g, &d, b)?,
            };

            let Some((x_new, f_new, g_new)) = step else {
                if !history.is_empty() {
                    history.clear();
                    continue;
                }
                status = MinimizeStatus::LineSearchFailure;
                break;
            };

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                if history.len() == options.memory.max(1) {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
            let f_old = f;
            x = x_new;
            f = f_new;
            g = g_new;
            f_history.push(f);

            if projected_gradient_norm(&x, &g, bounds) < options.grad_tol {
                status = MinimizeStatus::ConvergedGrad;
                break;
            }
            if (f_old - f) <= options.f_tol * f_old.abs().max(f.abs()).max(1.0) {
                status = MinimizeStatus::ConvergedF;
                break;
            }
        }
    }

    Ok(MinimizeResult {
        grad_norm: projected_gradient_norm(&x, &g, bounds),
        x_opt: x,
        f_opt: f,
        status,
        n_evals: counter.evals,
        n_iters: iters,
        f_history,
    })
}

fn mask_active(d: &mut [f64], x: &[f64], bounds: &[(f64, f64)]) {
    for ((di, &xi), &(lo, hi)) in d.iter_mut().zip(x).zip(bounds) {
        if (xi <= lo && *di < 0.0) || (xi >= hi && *di > 0.0) {
            *di = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        Ok((f, g))
    }

    #[test]
    fn shifted_quadratic() {
        let r = minimize(
            |x| Ok(((x[0] - 3.0).powi(2), vec![2.0 * (x[0] - 3.0)])),
            &[0.0],
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!((r.x_opt[0] - 3.0).abs() < 1e-8);
        assert!(r.converged());
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &MinimizeOptions::default()).unwrap();
        assert!((r.x_opt[0] - 1.0).abs() < 1e-6, "{r:?}");
        assert!((r.x_opt[1] - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn stationary_start_uses_one_evaluation() {
        let r = minimize(
            |x| Ok((x[0] * x[0], vec![2.0 * x[0]])),
            &[0.0],
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert_eq!(r.n_evals, 1);
        assert_eq!(r.x_opt, vec![0.0]);
        assert_eq!(r.status, MinimizeStatus::ConvergedGrad);
    }

    #[test]
    fn bounds_clip_the_minimum() {
        let opts = MinimizeOptions {
            bounds: Some(vec![(-1.0, 2.0)]),
            ..Default::default()
        };
        let r = minimize(
            |x| Ok(((x[0] - 3.0).powi(2), vec![2.0 * (x[0] - 3.0)])),
            &[0.0],
            &opts,
        )
        .unwrap();
        assert!((r.x_opt[0] - 2.0).abs() < 1e-12);
        assert!(r.converged());
    }

    #[test]
    fn iterates_never_increase() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &MinimizeOptions::default()).unwrap();
        assert!(r.f_history.len() > 10);
        assert!(r.f_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.f_history.last().unwrap(), r.f_opt);
    }

    #[test]
    fn permuting_coordinates_permutes_the_optimum() {
        let scaled = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let w = [1.0, 4.0, 9.0];
            let c = [0.5, -1.0, 2.0];
            let f = (0..3).map(|i| w[i] * (x[i] - c[i]).powi(2) + (x[i] - c[i]).powi(4)).sum();
            let g = (0..3)
                .map(|i| 2.0 * w[i] * (x[i] - c[i]) + 4.0 * (x[i] - c[i]).powi(3))
                .collect();
            Ok((f, g))
        };
        let perm = [2usize, 0, 1];
        let permuted = |y: &[f64]| -> Result<(f64, Vec<f64>)> {
            let mut x = [0.0; 3];
            for (k, &p) in perm.iter().enumerate() {
                x[p] = y[k];
            }
            let (f, g) = scaled(&x)?;
            Ok((f, perm.iter().map(|&p| g[p]).collect()))
        };
        let x0 = [0.1, 0.2, 0.3];
        let y0: Vec<f64> = perm.iter().map(|&p| x0[p]).collect();
        let a = minimize(scaled, &x0, &MinimizeOptions::default()).unwrap();
        let b = minimize(permuted, &y0, &MinimizeOptions::default()).unwrap();
        for (k, &p) in perm.iter().enumerate() {
            assert!((b.x_opt[k] - a.x_opt[p]).abs() < 1e-10);
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let a = minimize(rosenbrock, &[-1.2, 1.0], &MinimizeOptions::default()).unwrap();
        let b = minimize(rosenbrock, &[-1.2, 1.0], &MinimizeOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}

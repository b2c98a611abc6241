//! Deterministic first-order optimizers for the penalized log-likelihood.
//!
//! Both work on the negated objective (a minimization) and stop once the
//! infinity norm of the gradient falls to `tol`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{dot, inf_norm, value_and_gradient, Examples, LogRegError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Limited-memory BFGS with `memory` correction pairs.
    Lbfgs { memory: usize },
    /// Steepest ascent with backtracking line search.
    GradientAscent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Convergence threshold on the gradient's infinity norm.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Lbfgs { memory: 10 },
            tol: 1e-6,
            max_iters: 1000,
        }
    }
}

pub(crate) struct Outcome {
    pub theta: Vec<f64>,
    pub converged: bool,
    pub grad_norm: f64,
    pub iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const CURVATURE: f64 = 0.9;
/// Relative size of summation error tolerated in objective comparisons.
const NOISE: f64 = 1e-12;
const MAX_BACKTRACKS: usize = 60;

/// Negated objective and gradient at one point.
struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

struct Problem<'a, D: ?Sized> {
    data: &'a D,
    c: f64,
}

impl<D: Examples + ?Sized> Problem<'_, D> {
    fn eval(&self, x: Vec<f64>) -> Point {
        let mut g = vec![0.0; x.len()];
        let f = -value_and_gradient(&x, self.data, self.c, &mut g);
        g.iter_mut().for_each(|v| *v = -*v);
        Point { x, f, g }
    }

    /// Backtracking search along `dir` from `at`; `slope` is `g·dir < 0`.
    ///
    /// Near the optimum the decrease Armijo asks for falls below the rounding
    /// error of a sum over many matches. A step is then also accepted when the
    /// value has not risen beyond that noise and the directional derivative,
    /// which stays accurate, shows the step neither stalled nor overshot
    /// (approximate Wolfe conditions).
    fn line_search(&self, at: &Point, dir: &[f64], slope: f64, first_step: f64) -> Option<Point> {
        let noise = NOISE * at.f.abs().max(1.0);
        let mut step = first_step;
        for _ in 0..MAX_BACKTRACKS {
            let x: Vec<f64> = at.x.iter().zip(dir).map(|(x, d)| x + step * d).collect();
            let trial = self.eval(x);
            if trial.f.is_finite() {
                if trial.f <= at.f + ARMIJO * step * slope {
                    return Some(trial);
                }
                let new_slope = dot(&trial.g, dir);
                let flat = (2.0 * ARMIJO - 1.0) * slope >= new_slope && new_slope >= CURVATURE * slope;
                if trial.f <= at.f + noise && flat {
                    return Some(trial);
                }
            }
            step *= 0.5;
        }
        None
    }
}

pub(crate) fn maximize<D: Examples + ?Sized>(
    data: &D,
    c: f64,
    config: &OptimizerConfig,
    init: Vec<f64>,
) -> Result<Outcome, LogRegError> {
    let problem = Problem { data, c };
    let start = problem.eval(init);
    if !start.f.is_finite() || start.g.iter().any(|g| !g.is_finite()) {
        return Err(LogRegError::NonFinite);
    }
    let (end, iterations) = match config.method {
        Method::Lbfgs { memory } => lbfgs(&problem, start, memory.max(1), config),
        Method::GradientAscent => gradient_descent(&problem, start, config),
    };
    if !end.f.is_finite() || end.x.iter().any(|x| !x.is_finite()) {
        return Err(LogRegError::NonFinite);
    }
    let grad_norm = inf_norm(&end.g);
    Ok(Outcome {
        theta: end.x,
        converged: grad_norm <= config.tol,
        grad_norm,
        iterations,
    })
}

struct Correction {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H·g` by the two-loop recursion.
fn lbfgs_direction(g: &[f64], history: &VecDeque<Correction>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for h in history.iter().rev() {
        let a = h.rho * dot(&h.s, &q);
        q.iter_mut().zip(&h.y).for_each(|(q, y)| *q -= a * y);
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|q| *q *= gamma);
    }
    for (h, a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = h.rho * dot(&h.y, &q);
        q.iter_mut().zip(&h.s).for_each(|(q, s)| *q += (a - b) * s);
    }
    q.iter_mut().for_each(|q| *q = -*q);
    q
}

fn lbfgs<D: Examples + ?Sized>(
    problem: &Problem<'_, D>,
    mut at: Point,
    memory: usize,
    config: &OptimizerConfig,
) -> (Point, usize) {
    let mut history: VecDeque<Correction> = VecDeque::with_capacity(memory);
    let mut iterations = 0;
    while inf_norm(&at.g) > config.tol && iterations < config.max_iters {
        iterations += 1;
        let mut dir = lbfgs_direction(&at.g, &history);
        let mut slope = dot(&at.g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            dir = at.g.iter().map(|g| -g).collect();
            slope = -dot(&at.g, &at.g);
        }
        let first_step = if history.is_empty() {
            (1.0 / inf_norm(&at.g)).min(1.0)
        } else {
            1.0
        };
        let next = match problem.line_search(&at, &dir, slope, first_step) {
            Some(p) => p,
            // a stale curvature model can produce a useless direction; retry steepest
            None if !history.is_empty() => {
                history.clear();
                continue;
            }
            None => break,
        };
        let s: Vec<f64> = next.x.iter().zip(&at.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&at.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y) && sy > 0.0 {
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back(Correction { s, y, rho: 1.0 / sy });
        }
        at = next;
    }
    (at, iterations)
}

fn gradient_descent<D: Examples + ?Sized>(
    problem: &Problem<'_, D>,
    mut at: Point,
    config: &OptimizerConfig,
) -> (Point, usize) {
    let mut step = (1.0 / inf_norm(&at.g).max(f64::MIN_POSITIVE)).min(1.0);
    let mut iterations = 0;
    while inf_norm(&at.g) > config.tol && iterations < config.max_iters {
        iterations += 1;
        let dir: Vec<f64> = at.g.iter().map(|g| -g).collect();
        let slope = -dot(&at.g, &at.g);
        // let the step grow back after earlier backtracking
        let Some(next) = problem.line_search(&at, &dir, slope, step * 2.0) else {
            break;
        };
        let moved: f64 = next
            .x
            .iter()
            .zip(&at.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        step = moved / inf_norm(&dir);
        at = next;
    }
    (at, iterations)
}

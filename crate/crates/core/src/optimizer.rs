//! Feasibility search over smoothed constraint sets.
//!
//! Minimizes the squared-hinge merit `sum_i max(0, eps - c_i)^2` with
//! limited-memory quasi-Newton directions and a backtracking Armijo line
//! search. A point is accepted when every constraint is at least `-eps`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{evaluate, Evaluation};
use crate::ir::{BoolIndex, InterfaceMap, Program, YId};
use crate::smooth::{abstract_num, SmoothParams, SmoothedConstraintSet, DEFAULT_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Strictly increasing smoothing parameters, solved in order.
    pub beta_schedule: Vec<f64>,
    /// Smoothing parameter of the abstraction a result is judged on; at
    /// least the last scheduled value.
    pub check_beta: f64,
    /// Iterations spent on the `check_beta` abstraction itself when the
    /// schedule ends short of feasibility there.
    pub check_iters: usize,
    /// Iteration cap per beta value.
    pub max_iters: usize,
    pub eps: f64,
    /// Number of stored curvature pairs; 0 gives plain gradient descent.
    pub memory: usize,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Independent starting points per call (the first one may be a warm
    /// start).
    pub num_restarts: usize,
    /// Sampling range for real unknowns declared without bounds.
    pub default_range: (f64, f64),
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            beta_schedule: vec![1.0, 5.0, 25.0, 125.0],
            check_beta: 1000.0,
            check_iters: 100,
            max_iters: 300,
            eps: DEFAULT_EPS,
            memory: 8,
            armijo: 1e-4,
            max_backtracks: 60,
            num_restarts: 1,
            default_range: (-1.0, 1.0),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.beta_schedule.is_empty() {
            return Err("beta schedule is empty".into());
        }
        if self.beta_schedule.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err("beta values must be positive and finite".into());
        }
        if self.beta_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err("beta schedule must be strictly increasing".into());
        }
        if !(self.check_beta.is_finite() && self.check_beta >= *self.beta_schedule.last().unwrap()) {
            return Err("check beta must be finite and at least the last scheduled beta".into());
        }
        if !(self.eps >= 0.0) {
            return Err("eps must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NumStatus {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumResult {
    pub status: NumStatus,
    /// Final point (best found on UNSAT).
    pub x: Vec<f64>,
    /// Largest constraint violation `max(0, -c_i)` at `x`.
    pub residual: f64,
    pub merit: f64,
    pub iterations: usize,
}

/// One optimizer iteration, for tracing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterRecord {
    pub beta: f64,
    pub iter: usize,
    pub merit: f64,
    pub residual: f64,
    pub step: f64,
}

/// Consecutive steps without relative merit progress before giving up.
const STALL_LIMIT: usize = 10;

struct Point {
    merit: f64,
    residual: f64,
    min_value: f64,
    grad: Vec<f64>,
}

fn assess(s: &SmoothedConstraintSet, x: &[f64], margin: f64) -> Option<Point> {
    let e: Evaluation = evaluate(s, x).ok()?;
    let n = x.len();
    let mut merit = 0.0;
    let mut residual: f64 = 0.0;
    let mut min_value = f64::INFINITY;
    let mut grad = vec![0.0; n];
    for (i, &c) in e.values.iter().enumerate() {
        residual = residual.max(-c);
        min_value = min_value.min(c);
        let gap = margin - c;
        if gap > 0.0 {
            merit += gap * gap;
            for (g, &dc) in grad.iter_mut().zip(e.grad(i)) {
                *g -= 2.0 * gap * dc;
            }
        }
    }
    if !merit.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return None;
    }
    Some(Point {
        merit,
        residual,
        min_value,
        grad,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: approximates `-H g` from stored pairs.
fn lbfgs_direction(g: &[f64], pairs: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alpha = vec![0.0; pairs.len()];
    for (k, (s, y, rho)) in pairs.iter().enumerate().rev() {
        alpha[k] = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha[k] * yi;
        }
    }
    if let Some((s, y, _)) = pairs.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (k, (s, y, rho)) in pairs.iter().enumerate() {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha[k] - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Runs the local search on one constraint set from `x0`.
pub fn minimize(s: &SmoothedConstraintSet, x0: &[f64], cfg: &OptimizerConfig) -> NumResult {
    minimize_traced(s, x0, cfg, &mut |_| {})
}

pub fn minimize_traced(
    s: &SmoothedConstraintSet,
    x0: &[f64],
    cfg: &OptimizerConfig,
    trace: &mut dyn FnMut(IterRecord),
) -> NumResult {
    let eps = s.params.eps;
    let margin = eps;
    let beta = s.params.beta;
    let mut x = x0.to_vec();
    let Some(mut cur) = assess(s, &x, margin) else {
        return NumResult {
            status: NumStatus::Unsat,
            x,
            residual: f64::INFINITY,
            merit: f64::INFINITY,
            iterations: 0,
        };
    };
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    let mut stall = 0;
    while iterations < cfg.max_iters {
        if cur.min_value >= 0.0 {
            break;
        }
        let gnorm = dot(&cur.grad, &cur.grad).sqrt();
        if gnorm < 1e-10 {
            break;
        }
        iterations += 1;
        let mut dir = if cfg.memory > 0 && !pairs.is_empty() {
            lbfgs_direction(&cur.grad, &pairs)
        } else {
            cur.grad.iter().map(|g| -g / gnorm.max(1.0)).collect()
        };
        let mut slope = dot(&dir, &cur.grad);
        if !(slope < 0.0) {
            pairs.clear();
            dir = cur.grad.iter().map(|g| -g / gnorm.max(1.0)).collect();
            slope = dot(&dir, &cur.grad);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            if let Some(p) = assess(s, &xn, margin) {
                if p.merit <= cur.merit + cfg.armijo * step * slope {
                    accepted = Some((xn, p));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, next)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        if cfg.memory > 0 {
            let sv: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
            let sy = dot(&sv, &yv);
            if sy > 1e-12 * dot(&yv, &yv).max(1e-300) {
                if pairs.len() == cfg.memory {
                    pairs.remove(0);
                }
                pairs.push((sv, yv, 1.0 / sy));
            }
        }
        trace(IterRecord {
            beta,
            iter: iterations,
            merit: next.merit,
            residual: next.residual,
            step,
        });
        let stalled = cur.merit - next.merit <= 1e-12 * cur.merit.max(1e-300);
        x = xn;
        cur = next;
        stall = if stalled { stall + 1 } else { 0 };
        if stall >= STALL_LIMIT {
            break;
        }
    }
    NumResult {
        status: if cur.residual <= eps {
            NumStatus::Sat
        } else {
            NumStatus::Unsat
        },
        x,
        residual: cur.residual,
        merit: cur.merit,
        iterations,
    }
}

/// Starting values carried between numerical calls.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WarmStart {
    pub reals: Vec<f64>,
    /// Relaxed value per Boolean unknown.
    pub holes: Vec<Option<f64>>,
}

/// Result of a full beta-schedule run.
#[derive(Debug, Clone)]
pub struct Phase1 {
    pub result: NumResult,
    /// Abstraction at the last beta, the one `result` refers to.
    pub set: SmoothedConstraintSet,
    /// Values of the real unknowns.
    pub reals: Vec<f64>,
    /// Relaxed values of the Boolean unknowns that were relaxed.
    pub holes: Vec<Option<f64>>,
}

/// Random starting point: reals uniform over their bounds, relaxed Boolean
/// unknowns uniform over [0, 1].
pub fn random_start<R: Rng>(p: &Program, cfg: &OptimizerConfig, rng: &mut R) -> WarmStart {
    let reals = p
        .real_unknowns()
        .iter()
        .map(|d| {
            let (lo, hi) = d.bounds.unwrap_or(cfg.default_range);
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect();
    let holes = (0..p.bool_unknowns().len())
        .map(|_| Some(rng.gen_range(0.0..=1.0)))
        .collect();
    WarmStart { reals, holes }
}

fn initial_point<R: Rng>(set: &SmoothedConstraintSet, start: &WarmStart, nbools: usize, rng: &mut R) -> Vec<f64> {
    let mut x = start.reals.clone();
    x.resize(set.num_vars(), 0.5);
    for y in 0..nbools {
        if let Some(v) = set.relaxed_var(YId(y as u32)) {
            x[v] = start
                .holes
                .get(y)
                .copied()
                .flatten()
                .unwrap_or_else(|| rng.gen_range(0.0..=1.0));
        }
    }
    x
}

/// Phase 1: abstracts the program for each beta of the schedule and
/// minimizes, warm-starting each stage from the previous one. Up to
/// `num_restarts` starting points are tried (the first is `start` when
/// given); the first SAT wins, otherwise the run with the smallest final
/// residual is returned.
pub fn solve_phase1<R: Rng>(
    p: &Program,
    index: &BoolIndex,
    iface: &InterfaceMap,
    cfg: &OptimizerConfig,
    start: Option<&WarmStart>,
    rng: &mut R,
    trace: &mut dyn FnMut(IterRecord),
) -> Phase1 {
    let nbools = p.bool_unknowns().len();
    let build = |b: f64| abstract_num(p, index, iface, SmoothParams::new(b).with_eps(cfg.eps));
    let sets: Vec<SmoothedConstraintSet> = cfg.beta_schedule.iter().map(|&b| build(b)).collect();
    let final_set = build(cfg.check_beta);
    let final_set = &final_set;
    let polish = OptimizerConfig {
        max_iters: cfg.check_iters,
        ..cfg.clone()
    };
    let mut best: Option<(NumResult, usize)> = None;
    for r in 0..cfg.num_restarts.max(1) {
        let ws = match (r, start) {
            (0, Some(w)) => w.clone(),
            _ => random_start(p, cfg, rng),
        };
        let mut x = initial_point(&sets[0], &ws, nbools, rng);
        let mut iterations = 0;
        // Later stages are skipped once the sharpest abstraction already
        // holds at the current point.
        for set in &sets {
            if final_set.is_satisfied(&x) {
                break;
            }
            let res = minimize_traced(set, &x, cfg, trace);
            iterations += res.iterations;
            x = res.x;
        }
        let mut res = minimize_traced(final_set, &x, &polish, trace);
        res.iterations += iterations;
        let better = match &best {
            None => true,
            Some((b, _)) => res.residual < b.residual,
        };
        let sat = res.status == NumStatus::Sat;
        if better {
            best = Some((res, r));
        }
        if sat {
            break;
        }
    }
    let (result, _) = best.expect("at least one restart");
    let set = final_set.clone();
    let reals = result.x[..set.num_program_vars()].to_vec();
    let holes = (0..nbools)
        .map(|y| set.relaxed_var(YId(y as u32)).map(|v| result.x[v]))
        .collect();
    Phase1 {
        result,
        set,
        reals,
        holes,
    }
}

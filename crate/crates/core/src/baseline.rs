//! Only-smoothing baseline: the whole program is smoothed with an empty
//! interface mapping and solved by independent random-restart runs of the
//! numerical search, without any SAT reasoning.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ir::{verify, Assignment, InterfaceMap, Program};
use crate::optimizer::{solve_phase1, NumStatus, OptimizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub trials: usize,
    /// Trials whose numerical search reported success.
    pub found: usize,
    /// Trials whose rounded solution passed exact verification.
    pub correct: usize,
    /// First verified solution.
    pub assignment: Option<Assignment>,
    pub timed_out: bool,
    pub wall_ms: u64,
}

/// Runs `trials` independent searches. Boolean unknowns are read off by
/// rounding their relaxed values at 1/2.
pub fn baseline_smoothing(
    p: &Program,
    cfg: &OptimizerConfig,
    trials: usize,
    seed: u64,
    timeout: Duration,
) -> BaselineResult {
    let started = Instant::now();
    let index = p.collect_bool_nodes();
    let empty = InterfaceMap::empty(index.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut one = cfg.clone();
    one.num_restarts = 1;
    let mut res = BaselineResult {
        trials: 0,
        found: 0,
        correct: 0,
        assignment: None,
        timed_out: false,
        wall_ms: 0,
    };
    for _ in 0..trials {
        if started.elapsed() >= timeout {
            res.timed_out = true;
            break;
        }
        res.trials += 1;
        let ph = solve_phase1(p, &index, &empty, &one, None, &mut rng, &mut |_| {});
        if ph.result.status != NumStatus::Sat {
            continue;
        }
        res.found += 1;
        let bools = ph.holes.iter().map(|h| h.is_some_and(|v| v >= 0.5)).collect();
        let a = Assignment::new(ph.reals, bools);
        if matches!(verify(p, &a), Ok(true)) {
            res.correct += 1;
            if res.assignment.is_none() {
                res.assignment = Some(a);
            }
        }
    }
    res.wall_ms = started.elapsed().as_millis() as u64;
    res
}

//! The synthesis loop: numerical search over the smoothed abstraction and CDCL
//! search over the Boolean skeleton, exchanging an interface mapping.
//!
//! Each iteration runs three phases:
//! 1. abstract the program under the current mapping `I` and run the
//!    optimizer over the beta schedule;
//! 2. on numerical success turn the solution into decision suggestions, on
//!    failure drop the suggestions and, once more than `eta` entries of `I`
//!    are fixed, blame the SAT decisions with a soft conflict;
//! 3. let the SAT solver extend its assignment until an interface variable
//!    changes. A complete assignment that leaves `I` unchanged ends the
//!    search, after exact verification.

use std::io::Write;
use std::time::{Duration, Instant};

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boolean::{abstract_bool, BoolSkeleton, InterfaceScope};
use crate::ir::{verify, Assignment, BoolIndex, BoolTarget, InterfaceMap, Program, YId};
use crate::optimizer::{solve_phase1, NumStatus, OptimizerConfig, Phase1, WarmStart};
use crate::sat::{Lit, SatStatus, Solver, Suggestion, Var};
use crate::smooth::SmoothedConstraintSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreConfig {
    /// Conflict threshold: a numerical failure becomes a soft conflict only
    /// when more than `eta` interface entries are fixed.
    pub eta: usize,
    /// Maximum number of restarts after SOFT_UNSAT; `None` is unlimited.
    pub restart_limit: Option<usize>,
    pub timeout: Duration,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub interface: InterfaceScopeConfig,
    /// Start each numerical call from the previous call's output (otherwise
    /// from a fresh random point).
    pub warm_start: bool,
}

/// Serializable mirror of [`InterfaceScope`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InterfaceScopeConfig {
    #[default]
    All,
    AtomsAndHoles,
}

impl From<InterfaceScopeConfig> for InterfaceScope {
    fn from(s: InterfaceScopeConfig) -> Self {
        match s {
            InterfaceScopeConfig::All => InterfaceScope::All,
            InterfaceScopeConfig::AtomsAndHoles => InterfaceScope::AtomsAndHoles,
        }
    }
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig {
            eta: 5,
            restart_limit: None,
            timeout: Duration::from_secs(30 * 60),
            optimizer: OptimizerConfig::default(),
            seed: 0,
            interface: InterfaceScopeConfig::All,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Sat,
    Unsat,
    SoftUnsatExhausted,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    /// Optimizer invocations (full beta-schedule runs).
    pub numeric_calls: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub soft_conflicts: usize,
    pub sat_decisions: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present only with `status == Sat`; always passes exact verification.
    pub assignment: Option<Assignment>,
    pub stats: SolveStats,
}

/// A suggested value for an interface slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSuggestion {
    pub slot: usize,
    pub value: bool,
    pub cost: f64,
}

/// Suggestions from a numerical solution: each unfixed Boolean expression
/// gets the sign of its P-distance (cost `|d|`), each unfixed Boolean unknown
/// its rounded relaxed value (cost `|d - 1/2|`). Sorted by ascending cost, so
/// the least certain values are tried first.
pub fn gen_suggestions(
    index: &BoolIndex,
    set: &SmoothedConstraintSet,
    x: &[f64],
    iface: &InterfaceMap,
) -> Vec<SlotSuggestion> {
    let Ok(values) = set.eval_nodes(x) else {
        return Vec::new();
    };
    let mut out: Vec<SlotSuggestion> = (0..index.len())
        .filter(|&slot| iface.get(slot).is_none())
        .filter_map(|slot| {
            let d = values[set.slot_value(slot)?.index()];
            Some(match index.targets[slot] {
                BoolTarget::Node(_) => SlotSuggestion {
                    slot,
                    value: d >= 0.0,
                    cost: d.abs(),
                },
                BoolTarget::Hole(_) => SlotSuggestion {
                    slot,
                    value: d >= 0.5,
                    cost: (d - 0.5).abs(),
                },
            })
        })
        .collect();
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    out
}

/// More than `eta` entries of the mapping are fixed.
pub fn is_conflict(iface: &InterfaceMap, eta: usize) -> bool {
    iface.num_set() > eta
}

/// Clause blaming the current interface values: the negation of the fixed
/// entries that the solver assigned by decision, or of every fixed entry if
/// none was a decision.
pub fn gen_conflict(solver: &Solver, iface: &InterfaceMap) -> Vec<Lit> {
    let fixed: Vec<(Var, bool)> = iface
        .slots()
        .iter()
        .enumerate()
        .filter_map(|(slot, v)| v.map(|b| (Var(slot as u32), b)))
        .collect();
    let decisions: Vec<Lit> = fixed
        .iter()
        .filter(|(v, _)| solver.is_decision(*v))
        .map(|&(v, b)| v.lit(!b))
        .collect();
    if !decisions.is_empty() {
        return decisions;
    }
    fixed.into_iter().map(|(v, b)| v.lit(!b)).collect()
}

#[derive(Serialize)]
struct LogRecord {
    iteration: usize,
    interface_set: usize,
    numeric: NumStatus,
    residual: f64,
    soft_conflict: bool,
    sat: &'static str,
    numeric_calls: usize,
    restarts: usize,
}

/// Owns the SAT solver and the numerical state for one synthesis run.
pub struct Synthesizer<'p> {
    program: &'p Program,
    cfg: CoreConfig,
    skeleton: BoolSkeleton,
    solver: Solver,
    rng: ChaCha8Rng,
    run_log: Option<Box<dyn Write + 'p>>,
    opt_trace: Option<Box<dyn Write + 'p>>,
}

impl<'p> Synthesizer<'p> {
    pub fn new(program: &'p Program, cfg: CoreConfig) -> Self {
        Self::with_fixed(program, cfg, &[])
    }

    /// Like [`new`](Self::new), with some interface slots fixed by hard unit
    /// clauses.
    pub fn with_fixed(program: &'p Program, cfg: CoreConfig, fixed: &[(usize, bool)]) -> Self {
        let (mut cnf, skeleton) = abstract_bool(program, cfg.interface.into());
        for &(slot, value) in fixed {
            cnf.add_clause(&[Var(slot as u32).lit(value)]);
        }
        let solver = Solver::new(&cnf);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Synthesizer {
            program,
            cfg,
            skeleton,
            solver,
            rng,
            run_log: None,
            opt_trace: None,
        }
    }

    /// JSON-lines record per loop iteration.
    pub fn with_run_log(mut self, w: Box<dyn Write + 'p>) -> Self {
        self.run_log = Some(w);
        self
    }

    /// JSON-lines record per optimizer iteration.
    pub fn with_optimizer_trace(mut self, w: Box<dyn Write + 'p>) -> Self {
        self.opt_trace = Some(w);
        self
    }

    pub fn skeleton(&self) -> &BoolSkeleton {
        &self.skeleton
    }

    fn phase1(&mut self, iface: &InterfaceMap, start: Option<&WarmStart>, eps: f64) -> Phase1 {
        let mut cfg = self.cfg.optimizer.clone();
        cfg.eps = eps;
        let trace = &mut self.opt_trace;
        let mut sink = |rec| {
            if let Some(w) = trace.as_mut() {
                let _ = serde_json::to_writer(&mut *w, &rec);
                let _ = w.write_all(b"\n");
            }
        };
        solve_phase1(
            self.program,
            &self.skeleton.index,
            iface,
            &cfg,
            start,
            &mut self.rng,
            &mut sink,
        )
    }

    fn extract(&self, ph: &Phase1) -> Assignment {
        let model = self.solver.assignment();
        let bools = (0..self.program.bool_unknowns().len())
            .map(|y| {
                let y = YId(y as u32);
                let v = self.skeleton.var_of_hole(y);
                model[v.index()]
                    .or_else(|| ph.holes[y.index()].map(|r| r >= 0.5))
                    .unwrap_or(false)
            })
            .collect();
        Assignment::new(ph.reals.clone(), bools)
    }

    fn verified(&self, ph: &Phase1) -> Option<Assignment> {
        if ph.result.status != NumStatus::Sat {
            return None;
        }
        let a = self.extract(ph);
        matches!(verify(self.program, &a), Ok(true)).then_some(a)
    }

    fn log(&mut self, rec: LogRecord) {
        if let Some(w) = self.run_log.as_mut() {
            let _ = serde_json::to_writer(&mut *w, &rec);
            let _ = w.write_all(b"\n");
        }
    }

    pub fn run(mut self) -> SolveResult {
        let started = Instant::now();
        let deadline = started + self.cfg.timeout;
        let mut stats = SolveStats::default();
        let eps = self.cfg.optimizer.eps;
        let mut warm: Option<WarmStart> = None;
        let mut map;
        let mut r = self.solver.solve_incremental();
        loop {
            match r.status {
                SatStatus::Unsat => return self.finish(SolveStatus::Unsat, None, stats, started),
                SatStatus::SoftUnsat => {
                    if self.cfg.restart_limit.is_some_and(|l| stats.restarts >= l) {
                        return self.finish(SolveStatus::SoftUnsatExhausted, None, stats, started);
                    }
                    debug!("soft unsat, restart {}", stats.restarts + 1);
                    stats.restarts += 1;
                    self.solver.remove_soft_learnts();
                    self.solver.restart();
                    self.solver.remove_suggestions();
                    warm = None;
                    r = self.solver.solve_incremental();
                    continue;
                }
                SatStatus::Sat => map = self.skeleton.decode_model(&r.interface),
            }
            if Instant::now() >= deadline {
                return self.finish(SolveStatus::Timeout, None, stats, started);
            }
            stats.iterations += 1;

            // Phase 1
            let start = if self.cfg.warm_start { warm.take() } else { None };
            let ph = self.phase1(&map, start.as_ref(), eps);
            stats.numeric_calls += 1;
            warm = Some(WarmStart {
                reals: ph.reals.clone(),
                holes: ph.holes.clone(),
            });

            // Phase 2
            let mut soft = false;
            if ph.result.status == NumStatus::Sat {
                let sugg = gen_suggestions(&self.skeleton.index, &ph.set, &ph.result.x, &map)
                    .into_iter()
                    .map(|s| Suggestion::new(Var(s.slot as u32), s.value, s.cost))
                    .collect();
                self.solver.set_suggestions(sugg);
            } else {
                self.solver.remove_suggestions();
                if is_conflict(&map, self.cfg.eta) {
                    soft = self.soft_conflict(&map, &mut stats);
                }
            }

            // Phase 3
            r = self.solver.solve_incremental();
            let unchanged = r.status == SatStatus::Sat && self.skeleton.decode_model(&r.interface) == map;
            self.log(LogRecord {
                iteration: stats.iterations,
                interface_set: map.num_set(),
                numeric: ph.result.status,
                residual: ph.result.residual,
                soft_conflict: soft,
                sat: match r.status {
                    SatStatus::Sat if unchanged => "SAT_DONE",
                    SatStatus::Sat => "SAT",
                    SatStatus::Unsat => "UNSAT",
                    SatStatus::SoftUnsat => "SOFT_UNSAT",
                },
                numeric_calls: stats.numeric_calls,
                restarts: stats.restarts,
            });
            if !unchanged {
                continue;
            }
            if let Some(a) = self.verified(&ph) {
                return self.finish(SolveStatus::Sat, Some(a), stats, started);
            }
            if ph.result.status == NumStatus::Sat {
                // The smoothed solution failed exact verification: retry once
                // with a tighter slack before blaming the Boolean side.
                let tighter = self.phase1(&map, warm.as_ref(), eps / 10.0);
                stats.numeric_calls += 1;
                if let Some(a) = self.verified(&tighter) {
                    return self.finish(SolveStatus::Sat, Some(a), stats, started);
                }
            }
            if !self.soft_conflict(&map, &mut stats) {
                // Nothing to blame: treat like an exhausted soft search.
                self.solver.add_soft_conflict(&[]).ok();
            }
            r = self.solver.solve_incremental();
        }
    }

    fn finish(&self, status: SolveStatus, assignment: Option<Assignment>, mut stats: SolveStats, started: Instant) -> SolveResult {
        stats.wall_ms = started.elapsed().as_millis() as u64;
        stats.sat_decisions = self.solver.stats().decisions;
        SolveResult {
            status,
            assignment,
            stats,
        }
    }

    /// Adds the [`gen_conflict`] clause; returns whether one was added.
    fn soft_conflict(&mut self, map: &InterfaceMap, stats: &mut SolveStats) -> bool {
        let clause = gen_conflict(&self.solver, map);
        match self.solver.add_soft_conflict(&clause) {
            Ok(()) => {
                stats.soft_conflicts += 1;
                true
            }
            Err(e) => {
                debug!("soft conflict rejected: {e}");
                false
            }
        }
    }
}

/// Runs the synthesis loop on `p`.
pub fn solve(p: &Program, cfg: CoreConfig) -> SolveResult {
    Synthesizer::new(p, cfg).run()
}

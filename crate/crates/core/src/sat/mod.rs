//! CDCL SAT solver with two extra structures: *soft learnts* (revocable
//! clauses coming from numerical conflicts, and everything derived from them)
//! and *suggestions* (cost-ordered decision hints).
//!
//! The solver is driven incrementally: [`Solver::solve_incremental`] returns
//! as soon as a new interface variable has been assigned, so the caller can
//! re-run the numerical side on the refined interface mapping.

mod dimacs;
mod heap;
mod types;

pub use dimacs::{parse_dimacs, write_dimacs, DimacsError};
pub use types::{CnfProblem, Lit, Var};

use heap::VarOrder;
use log::trace;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClauseKind {
    Original,
    HardLearnt,
    SoftLearnt,
}

impl ClauseKind {
    pub fn is_soft(self) -> bool {
        self == ClauseKind::SoftLearnt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
    /// Unsatisfiable, but the refutation used at least one soft clause.
    SoftUnsat,
}

/// A decision hint: try `lit` before any heuristic decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Suggestion {
    pub lit: Lit,
    pub cost: f64,
}

impl Suggestion {
    pub fn new(var: Var, value: bool, cost: f64) -> Self {
        Suggestion {
            lit: var.lit(value),
            cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("soft conflict clause is not falsified by the current assignment (literal {0:?})")]
    NotFalsified(Lit),
    #[error("literal {0:?} refers to an unknown variable")]
    UnknownVar(Lit),
}

/// Result of one [`Solver::solve_incremental`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct Incremental {
    pub status: SatStatus,
    /// All variables are assigned (only meaningful with `status == Sat`).
    pub complete: bool,
    /// Interface variables assigned or re-valued since the previous report.
    pub newly_assigned: Vec<Lit>,
    /// Current value of every interface variable (`None` for unassigned or
    /// non-interface variables).
    pub interface: Vec<Option<bool>>,
}

#[derive(Debug, Clone)]
struct Clause {
    lits: Vec<Lit>,
    kind: ClauseKind,
    activity: f64,
    deleted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: Lit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SatStats {
    pub decisions: u64,
    pub suggested_decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub soft_conflicts: u64,
    pub reductions: u64,
}

#[derive(Debug, Clone)]
pub struct Solver {
    num_vars: usize,
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    /// For level-0 assignments: whether the derivation used a soft clause.
    taint: Vec<bool>,
    phase: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: VarOrder,
    seen: Vec<bool>,
    suggestions: Vec<Suggestion>,
    interface: Vec<bool>,
    reported: Vec<Option<bool>>,
    scan_from: usize,
    hard_unsat: bool,
    soft_unsat: bool,
    max_learnts: f64,
    stats: SatStats,
}

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const LEARNT_GROWTH: f64 = 1.1;

impl Solver {
    /// `Init(ψ_B)`: loads the clauses and runs top-level unit propagation.
    pub fn new(cnf: &CnfProblem) -> Self {
        let n = cnf.num_vars;
        let mut s = Solver {
            num_vars: n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            taint: vec![false; n],
            phase: vec![false; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarOrder::new(n),
            seen: vec![false; n],
            suggestions: Vec::new(),
            interface: {
                let mut i = cnf.interface.clone();
                i.resize(n, false);
                i
            },
            reported: vec![None; n],
            scan_from: 0,
            hard_unsat: false,
            soft_unsat: false,
            max_learnts: (cnf.clauses.len() as f64 / 3.0).max(1000.0),
            stats: SatStats::default(),
        };
        for v in 0..n as u32 {
            s.order.insert(v, &s.activity);
        }
        for c in &cnf.clauses {
            let mut lits = c.clone();
            lits.sort();
            lits.dedup();
            if lits.windows(2).any(|w| w[0] == !w[1]) {
                continue; // tautology
            }
            if lits.is_empty() {
                s.hard_unsat = true;
                continue;
            }
            let cref = s.push_clause(lits, ClauseKind::Original);
            if s.clauses[cref as usize].lits.len() >= 2 {
                s.attach(cref);
            }
        }
        s.enqueue_units();
        if !s.hard_unsat && s.propagate().is_some() {
            s.hard_unsat = true;
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn stats(&self) -> SatStats {
        self.stats
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.assigns[v.index()]
    }

    pub fn lit_value(&self, l: Lit) -> Option<bool> {
        self.assigns[l.var().index()].map(|b| b == l.is_positive())
    }

    pub fn level_of(&self, v: Var) -> Option<u32> {
        self.assigns[v.index()].map(|_| self.level[v.index()])
    }

    /// Whether `v` was assigned by a decision (as opposed to propagation).
    pub fn is_decision(&self, v: Var) -> bool {
        self.assigns[v.index()].is_some() && self.reason[v.index()].is_none() && self.level[v.index()] > 0
    }

    pub fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    pub fn num_assigned(&self) -> usize {
        self.trail.len()
    }

    pub fn is_interface(&self, v: Var) -> bool {
        self.interface[v.index()]
    }

    pub fn num_clauses(&self, kind: ClauseKind) -> usize {
        self.clauses
            .iter()
            .filter(|c| !c.deleted && c.kind == kind)
            .count()
    }

    pub fn suggestions(&self) -> &[Suggestion] {
        &self.suggestions
    }

    /// Total model, available once every variable is assigned.
    pub fn model(&self) -> Option<Vec<bool>> {
        self.assigns.iter().copied().collect()
    }

    /// Current partial assignment.
    pub fn assignment(&self) -> &[Option<bool>] {
        &self.assigns
    }

    /// `SetSuggestions`: replaces the suggestion list (sorted by ascending
    /// cost, one entry per variable, cheapest kept).
    pub fn set_suggestions(&mut self, mut list: Vec<Suggestion>) {
        list.retain(|s| s.lit.var().index() < self.num_vars);
        list.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        let mut seen = vec![false; self.num_vars];
        list.retain(|s| !std::mem::replace(&mut seen[s.lit.var().index()], true));
        self.suggestions = list;
    }

    /// `RemoveSuggestions`
    pub fn remove_suggestions(&mut self) {
        self.suggestions.clear();
    }

    /// `Restart`: undoes every decision. Level-0 facts and hard learnts stay.
    /// The interface report is reset, so the next call re-reports level-0
    /// interface variables.
    pub fn restart(&mut self) {
        self.backtrack(0);
        self.reported.iter_mut().for_each(|r| *r = None);
        self.scan_from = 0;
    }

    /// `RemoveSoftLearnts`: detaches every soft clause. All assignments are
    /// undone (including level 0, whose facts may depend on soft clauses) and
    /// top-level propagation is redone from the remaining clauses.
    pub fn remove_soft_learnts(&mut self) {
        self.backtrack(0);
        for l in std::mem::take(&mut self.trail) {
            let v = l.var().index();
            self.assigns[v] = None;
            self.reason[v] = None;
            self.taint[v] = false;
            self.order.insert(v as u32, &self.activity);
        }
        self.qhead = 0;
        self.clauses.retain(|c| !c.deleted && !c.kind.is_soft());
        self.rebuild_watches();
        self.soft_unsat = false;
        self.reported.iter_mut().for_each(|r| *r = None);
        self.scan_from = 0;
        if !self.hard_unsat {
            self.enqueue_units();
            if self.propagate().is_some() {
                self.hard_unsat = true;
            }
        }
    }

    /// `AddSoftConflict`: analyzes a clause falsified by the current
    /// assignment, backjumps, and records the learnt clause as soft.
    pub fn add_soft_conflict(&mut self, clause: &[Lit]) -> Result<(), SatError> {
        let mut lits = clause.to_vec();
        lits.sort();
        lits.dedup();
        for &l in &lits {
            if l.var().index() >= self.num_vars {
                return Err(SatError::UnknownVar(l));
            }
            if self.lit_value(l) != Some(false) {
                return Err(SatError::NotFalsified(l));
            }
        }
        self.stats.soft_conflicts += 1;
        trace!("soft conflict {:?}", lits);
        let max_level = lits.iter().map(|l| self.level[l.var().index()]).max();
        match max_level {
            None | Some(0) => {
                self.soft_unsat = true;
                return Ok(());
            }
            Some(lvl) => self.backtrack(lvl),
        }
        let (learnt, bt, _) = self.analyze(&lits, true);
        self.backtrack(bt);
        self.learn(learnt, true);
        Ok(())
    }

    /// `SolveIncremental`: decides (suggestions first) and propagates until a
    /// new interface variable is assigned, every variable is assigned, or a
    /// refutation is found.
    pub fn solve_incremental(&mut self) -> Incremental {
        if self.hard_unsat {
            return self.report(SatStatus::Unsat, false, Vec::new());
        }
        if self.soft_unsat {
            return self.report(SatStatus::SoftUnsat, false, Vec::new());
        }
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    let c = &self.clauses[confl as usize];
                    let tainted =
                        c.kind.is_soft() || c.lits.iter().any(|l| self.taint[l.var().index()]);
                    if tainted {
                        self.soft_unsat = true;
                        return self.report(SatStatus::SoftUnsat, false, Vec::new());
                    }
                    self.hard_unsat = true;
                    return self.report(SatStatus::Unsat, false, Vec::new());
                }
                let lits = self.clauses[confl as usize].lits.clone();
                let soft0 = self.clauses[confl as usize].kind.is_soft();
                self.bump_clause(confl);
                let (learnt, bt, soft) = self.analyze(&lits, soft0);
                self.backtrack(bt);
                self.learn(learnt, soft);
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
                continue;
            }
            let fresh = self.fresh_interface();
            if !fresh.is_empty() {
                return self.report(SatStatus::Sat, false, fresh);
            }
            match self.pick_branch() {
                None => return self.report(SatStatus::Sat, true, Vec::new()),
                Some(l) => {
                    if self.num_learnts() as f64 >= self.max_learnts + self.trail.len() as f64 {
                        self.reduce_db();
                    }
                    self.stats.decisions += 1;
                    trace!("decide {:?} at level {}", l, self.decision_level() + 1);
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(l, None);
                }
            }
        }
    }

    /// Runs to completion: SAT with a full model, UNSAT or SOFT_UNSAT.
    pub fn solve(&mut self) -> SatStatus {
        loop {
            let r = self.solve_incremental();
            if r.status != SatStatus::Sat || r.complete {
                return r.status;
            }
        }
    }

    fn report(&mut self, status: SatStatus, complete: bool, newly: Vec<Lit>) -> Incremental {
        let interface: Vec<Option<bool>> = (0..self.num_vars)
            .map(|v| {
                if self.interface[v] {
                    self.assigns[v]
                } else {
                    None
                }
            })
            .collect();
        self.reported.clone_from(&interface);
        self.scan_from = self.trail.len();
        Incremental {
            status,
            complete,
            newly_assigned: newly,
            interface,
        }
    }

    fn fresh_interface(&mut self) -> Vec<Lit> {
        let start = self.scan_from.min(self.trail.len());
        let fresh: Vec<Lit> = self.trail[start..]
            .iter()
            .copied()
            .filter(|l| {
                let v = l.var().index();
                self.interface[v] && self.reported[v] != Some(l.is_positive())
            })
            .collect();
        self.scan_from = self.trail.len();
        fresh
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        if let Some(s) = self
            .suggestions
            .iter()
            .find(|s| self.assigns[s.lit.var().index()].is_none())
        {
            self.stats.suggested_decisions += 1;
            return Some(s.lit);
        }
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v as usize].is_none() {
                return Some(Lit::new(Var(v), self.phase[v as usize]));
            }
        }
        None
    }

    fn push_clause(&mut self, lits: Vec<Lit>, kind: ClauseKind) -> u32 {
        let cref = self.clauses.len() as u32;
        self.clauses.push(Clause {
            lits,
            kind,
            activity: 0.0,
            deleted: false,
        });
        cref
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        let (a, b) = (c.lits[0], c.lits[1]);
        self.watches[(!a).code()].push(Watch { cref, blocker: b });
        self.watches[(!b).code()].push(Watch { cref, blocker: a });
    }

    fn rebuild_watches(&mut self) {
        self.watches.iter_mut().for_each(Vec::clear);
        for i in 0..self.clauses.len() {
            if !self.clauses[i].deleted && self.clauses[i].lits.len() >= 2 {
                self.attach(i as u32);
            }
        }
    }

    fn enqueue_units(&mut self) {
        for i in 0..self.clauses.len() {
            let c = &self.clauses[i];
            if c.deleted || c.lits.len() != 1 {
                continue;
            }
            let l = c.lits[0];
            match self.lit_value(l) {
                Some(true) => {}
                Some(false) => {
                    if c.kind.is_soft() || self.taint[l.var().index()] {
                        self.soft_unsat = true;
                    } else {
                        self.hard_unsat = true;
                    }
                }
                None => self.enqueue(l, Some(i as u32)),
            }
        }
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var().index();
        debug_assert!(self.assigns[v].is_none());
        self.assigns[v] = Some(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.taint[v] = match reason {
            Some(cref) if self.trail_lim.is_empty() => {
                let c = &self.clauses[cref as usize];
                c.kind.is_soft()
                    || c.lits
                        .iter()
                        .any(|q| q.var() != l.var() && self.taint[q.var().index()])
            }
            _ => false,
        };
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            'watches: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) == Some(true) {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.lit_value(first) == Some(true) {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                for k in 2..len {
                    let lk = self.clauses[cref].lits[k];
                    if self.lit_value(lk) != Some(false) {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[(!lk).code()].push(nw);
                        continue 'watches;
                    }
                }
                ws[j] = nw;
                j += 1;
                if self.lit_value(first) == Some(false) {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[p.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    /// First-UIP analysis of a clause falsified at the current level.
    /// Returns (learnt clause with the asserting literal first, backjump
    /// level, soft taint).
    fn analyze(&mut self, conflict: &[Lit], mut soft: bool) -> (Vec<Lit>, u32, bool) {
        let current = self.decision_level();
        let mut learnt = vec![Lit::new(Var(0), true)];
        let mut path = 0usize;
        let mut idx = self.trail.len();
        let mut lits: Vec<Lit> = conflict.to_vec();
        let mut skip_first = false;
        let uip;
        loop {
            for (k, &q) in lits.iter().enumerate() {
                if skip_first && k == 0 {
                    continue;
                }
                let v = q.var().index();
                if self.level[v] == 0 {
                    soft |= self.taint[v];
                    continue;
                }
                if !self.seen[v] {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            let p = loop {
                idx -= 1;
                let p = self.trail[idx];
                if self.seen[p.var().index()] {
                    break p;
                }
            };
            let v = p.var().index();
            self.seen[v] = false;
            path -= 1;
            if path == 0 {
                uip = p;
                break;
            }
            let r = self.reason[v].expect("implied literal has a reason") as usize;
            soft |= self.clauses[r].kind.is_soft();
            self.bump_clause(r as u32);
            lits = self.clauses[r].lits.clone();
            skip_first = true;
        }
        learnt[0] = !uip;
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var().index()] > self.level[learnt[best].var().index()] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt, soft)
    }

    fn learn(&mut self, learnt: Vec<Lit>, soft: bool) {
        let kind = if soft {
            ClauseKind::SoftLearnt
        } else {
            ClauseKind::HardLearnt
        };
        trace!("learn {:?} ({:?})", learnt, kind);
        let asserting = learnt[0];
        let len = learnt.len();
        let cref = self.push_clause(learnt, kind);
        if len >= 2 {
            self.attach(cref);
        }
        self.bump_clause(cref);
        self.enqueue(asserting, Some(cref));
    }

    fn backtrack(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var().index();
            self.phase[v] = l.is_positive();
            self.assigns[v] = None;
            self.reason[v] = None;
            self.order.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = self.qhead.min(lim);
        self.scan_from = self.scan_from.min(lim);
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            self.activity.iter_mut().for_each(|a| *a *= 1e-100);
            self.var_inc *= 1e-100;
        }
        self.order.increased(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        if c.kind == ClauseKind::Original {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut() {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn num_learnts(&self) -> usize {
        self.clauses
            .iter()
            .filter(|c| !c.deleted && c.kind == ClauseKind::HardLearnt)
            .count()
    }

    fn locked(&self, cref: usize) -> bool {
        let c = &self.clauses[cref];
        let v = c.lits[0].var().index();
        self.reason[v] == Some(cref as u32) && self.lit_value(c.lits[0]) == Some(true)
    }

    /// Deletes the less active half of the hard learnts (soft learnts are
    /// exempt; they are cleared wholesale).
    fn reduce_db(&mut self) {
        self.stats.reductions += 1;
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                !c.deleted && c.kind == ClauseKind::HardLearnt && c.lits.len() > 2 && !self.locked(i)
            })
            .collect();
        cands.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .total_cmp(&self.clauses[b].activity)
        });
        for &i in &cands[..cands.len() / 2] {
            self.clauses[i].deleted = true;
            self.clauses[i].lits.clear();
        }
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !self.clauses[w.cref as usize].deleted);
        }
        self.max_learnts *= LEARNT_GROWTH;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(d: i64) -> Lit {
        Lit::from_dimacs(d)
    }

    fn cnf(n: usize, clauses: &[&[i64]]) -> CnfProblem {
        let mut c = CnfProblem::new(n);
        for cl in clauses {
            c.add_clause(&cl.iter().map(|&d| lit(d)).collect::<Vec<_>>());
        }
        c.interface = vec![true; n];
        c
    }

    #[test]
    fn empty_problem_is_ready() {
        let s = Solver::new(&CnfProblem::new(3));
        assert_eq!(s.num_assigned(), 0);
    }

    #[test]
    fn unit_propagates_at_init() {
        let s = Solver::new(&cnf(2, &[&[1], &[-1, 2]]));
        assert_eq!(s.value(Var(0)), Some(true));
        assert_eq!(s.value(Var(1)), Some(true));
    }

    #[test]
    fn contradictory_units() {
        let mut s = Solver::new(&cnf(1, &[&[1], &[-1]]));
        assert_eq!(s.solve(), SatStatus::Unsat);
    }

    #[test]
    fn suggestions_first_in_cost_order() {
        let mut s = Solver::new(&cnf(3, &[&[1, 2, 3]]));
        s.set_suggestions(vec![
            Suggestion::new(Var(1), false, 0.5),
            Suggestion::new(Var(0), true, 0.1),
        ]);
        let r = s.solve_incremental();
        assert_eq!(r.status, SatStatus::Sat);
        assert_eq!(r.newly_assigned, vec![lit(1)]);
        assert!(s.is_decision(Var(0)));
        let r = s.solve_incremental();
        assert_eq!(r.newly_assigned, vec![lit(-2)]);
    }

    #[test]
    fn suggestion_contradicting_propagation_is_skipped() {
        let mut s = Solver::new(&cnf(2, &[&[1], &[-1, -2]]));
        s.set_suggestions(vec![Suggestion::new(Var(1), true, 0.0)]);
        assert_eq!(s.solve(), SatStatus::Sat);
        assert_eq!(s.value(Var(1)), Some(false));
    }

    #[test]
    fn all_assigned_reports_complete() {
        let mut s = Solver::new(&cnf(2, &[&[1], &[2]]));
        let r = s.solve_incremental();
        assert_eq!(r.newly_assigned.len(), 2);
        let r = s.solve_incremental();
        assert_eq!(r.status, SatStatus::Sat);
        assert!(r.complete);
        assert!(r.newly_assigned.is_empty());
    }

    fn pigeonhole(pigeons: usize, holes: usize) -> CnfProblem {
        let var = |p: usize, h: usize| (p * holes + h + 1) as i64;
        let mut clauses: Vec<Vec<i64>> = Vec::new();
        for p in 0..pigeons {
            clauses.push((0..holes).map(|h| var(p, h)).collect());
        }
        for h in 0..holes {
            for p in 0..pigeons {
                for q in p + 1..pigeons {
                    clauses.push(vec![-var(p, h), -var(q, h)]);
                }
            }
        }
        let refs: Vec<&[i64]> = clauses.iter().map(|c| c.as_slice()).collect();
        cnf(pigeons * holes, &refs)
    }

    #[test]
    fn pigeonhole_is_hard_unsat() {
        let mut s = Solver::new(&pigeonhole(3, 2));
        assert_eq!(s.solve(), SatStatus::Unsat);
        let mut s = Solver::new(&pigeonhole(5, 4));
        assert_eq!(s.solve(), SatStatus::Unsat);
    }

    #[test]
    fn soft_conflict_flips_last_decision() {
        let mut s = Solver::new(&cnf(2, &[]));
        s.set_suggestions(vec![
            Suggestion::new(Var(0), true, 0.0),
            Suggestion::new(Var(1), true, 1.0),
        ]);
        s.solve_incremental();
        s.solve_incremental();
        assert_eq!(s.value(Var(1)), Some(true));
        s.add_soft_conflict(&[lit(-1), lit(-2)]).unwrap();
        // Backjumped to level 1 and asserted not v2 by the soft learnt.
        assert_eq!(s.decision_level(), 1);
        assert_eq!(s.value(Var(1)), Some(false));
        assert_eq!(s.num_clauses(ClauseKind::SoftLearnt), 1);
    }

    #[test]
    fn soft_conflict_must_be_falsified() {
        let mut s = Solver::new(&cnf(2, &[]));
        assert_eq!(
            s.add_soft_conflict(&[lit(1)]),
            Err(SatError::NotFalsified(lit(1)))
        );
    }

    #[test]
    fn soft_unsat_then_recover() {
        // Only model: v1 = v2 = 1.
        let mut s = Solver::new(&cnf(2, &[&[1], &[-1, 2]]));
        s.add_soft_conflict(&[lit(-1), lit(-2)]).unwrap();
        assert_eq!(s.solve(), SatStatus::SoftUnsat);
        s.remove_soft_learnts();
        s.restart();
        assert_eq!(s.solve(), SatStatus::Sat);
    }

    #[test]
    fn soft_taint_propagates_through_learning() {
        // (v1 or v2), soft-block v1 at level 1; then hard clauses make v2 impossible.
        let mut s = Solver::new(&cnf(3, &[&[1, 2], &[-2, 3], &[-2, -3]]));
        s.set_suggestions(vec![Suggestion::new(Var(0), true, 0.0)]);
        s.solve_incremental();
        assert_eq!(s.value(Var(0)), Some(true));
        s.add_soft_conflict(&[lit(-1)]).unwrap();
        assert_eq!(s.solve(), SatStatus::SoftUnsat);
        s.remove_soft_learnts();
        assert_eq!(s.solve(), SatStatus::Sat);
        assert_eq!(s.value(Var(0)), Some(true));
    }

    #[test]
    fn restart_keeps_level_zero() {
        let mut s = Solver::new(&cnf(3, &[&[1], &[2, 3]]));
        assert_eq!(s.solve(), SatStatus::Sat);
        assert_eq!(s.num_assigned(), 3);
        s.restart();
        assert_eq!(s.num_assigned(), 1);
        assert_eq!(s.value(Var(0)), Some(true));
    }

    #[test]
    fn restart_rereports_level_zero_interface() {
        let mut s = Solver::new(&cnf(2, &[&[1]]));
        let r = s.solve_incremental();
        assert_eq!(r.newly_assigned, vec![lit(1)]);
        s.restart();
        let r = s.solve_incremental();
        assert_eq!(r.newly_assigned, vec![lit(1)]);
    }
}

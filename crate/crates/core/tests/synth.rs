use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reas::boolean::{abstract_bool, InterfaceScope};
use reas::ir::{parse_program, verify, Assignment, InterfaceMap};
use reas::random::{random_program, RandomProgramConfig};
use reas::sat::{CnfProblem, Solver, Suggestion, Var};
use reas::smooth::{abstract_num, SmoothParams};
use reas::synth::{gen_conflict, gen_suggestions, is_conflict, solve, CoreConfig, SolveStatus, Synthesizer};

const BRANCH_CHAIN: &str = "
(real x1 -20 6)
(define a0 (- x1 5))
(define a1 (ite (<= x1 4) (- 6 x1) a0))
(define a2 (ite (<= x1 2) (- 8 x1) a1))
(define a3 (ite (<= x1 0) (+ 21 x1) a2))
(assert (or (<= a3 0) (> a3 25)))
";

/// Feasible x1 values of the branch chain on a 1e-3 grid, as closed
/// intervals between the first and last feasible grid point of each run.
fn branch_chain_grid() -> Vec<(f64, f64)> {
    let mut runs = Vec::new();
    let mut open: Option<f64> = None;
    let mut last = 0.0;
    for i in 0..=26_000 {
        let x1 = -20.0 + i as f64 * 1e-3;
        // Straight-line reading, independent of the IR.
        let a = if x1 <= 0.0 {
            21.0 + x1
        } else if x1 <= 2.0 {
            8.0 - x1
        } else if x1 <= 4.0 {
            6.0 - x1
        } else {
            x1 - 5.0
        };
        let ok = a <= 0.0 || a > 25.0;
        match (ok, open) {
            (true, None) => open = Some(x1),
            (false, Some(lo)) => {
                runs.push((lo, last));
                open = None;
            }
            _ => {}
        }
        last = x1;
    }
    if let Some(lo) = open {
        runs.push((lo, last));
    }
    runs
}

fn quick(seed: u64) -> CoreConfig {
    CoreConfig {
        seed,
        timeout: Duration::from_secs(60),
        ..CoreConfig::default()
    }
}

#[test]
fn grid_oracle_finds_one_interval() {
    let runs = branch_chain_grid();
    assert_eq!(runs.len(), 1);
    let (lo, hi) = runs[0];
    assert!((lo - 4.001).abs() < 1e-9 && (hi - 5.0).abs() < 1e-9, "{runs:?}");
}

#[test]
fn branch_chain_solves_into_feasible_interval() {
    let p = parse_program(BRANCH_CHAIN).unwrap();
    let runs = branch_chain_grid();
    for seed in 0..5 {
        let r = solve(&p, quick(seed));
        assert_eq!(r.status, SolveStatus::Sat, "seed {seed}: {:?}", r.stats);
        let a = r.assignment.unwrap();
        assert!(verify(&p, &a).unwrap());
        let x1 = a.reals[0];
        assert!(
            runs.iter().any(|&(lo, hi)| x1 >= lo - 1e-3 && x1 <= hi + 1e-3),
            "seed {seed}: x1 = {x1}"
        );
    }
}

#[test]
fn nested_ite_with_fixed_condition() {
    let p = parse_program("(real x1) (real x2) (real x3) (assert (>= (ite (>= x1 0) x2 x3) 0))").unwrap();
    let r = Synthesizer::with_fixed(&p, quick(0), &[(0, false)]).run();
    assert_eq!(r.status, SolveStatus::Sat);
    let a = r.assignment.unwrap();
    assert!(a.reals[0] < 0.0 && a.reals[2] >= 0.0, "{a:?}");
}

#[test]
fn contradiction_terminates() {
    let p = parse_program("(real x) (assert (>= x 0)) (assert (>= (- (- x) 1) 0))").unwrap();
    let cfg = CoreConfig {
        restart_limit: Some(3),
        ..quick(0)
    };
    let r = solve(&p, cfg);
    assert!(
        matches!(r.status, SolveStatus::Unsat | SolveStatus::SoftUnsatExhausted),
        "{:?}",
        r.status
    );
    assert!(r.assignment.is_none());
    assert!(r.stats.restarts <= 3);
}

#[test]
fn skeleton_contradiction_is_unsat() {
    let p = parse_program("(real x) (assert (>= x 0)) (assert (not (>= x 0)))").unwrap();
    let r = solve(&p, quick(0));
    assert_eq!(r.status, SolveStatus::Unsat);
    assert_eq!(r.stats.numeric_calls, 0);
}

#[test]
fn suggestion_signs_and_costs() {
    let p = parse_program("(real x) (assert (>= (* x x) 0)) (assert (>= x 0))").unwrap();
    let idx = p.collect_bool_nodes();
    let iface = InterfaceMap::empty(idx.len());
    let s = abstract_num(&p, &idx, &iface, SmoothParams::new(1.0));
    let sug = gen_suggestions(&idx, &s, &[-3.2], &iface);
    let ge_x = sug.iter().find(|g| (g.cost - 3.2).abs() < 1e-12).unwrap();
    assert!(!ge_x.value);
    assert!(sug.windows(2).all(|w| w[0].cost <= w[1].cost));
}

#[test]
fn relaxed_hole_suggestion() {
    let p = parse_program("(bool y) (real a) (real b) (assert (>= (iteh y a b) 0))").unwrap();
    let idx = p.collect_bool_nodes();
    let iface = InterfaceMap::empty(idx.len());
    let s = abstract_num(&p, &idx, &iface, SmoothParams::new(1.0));
    let sug = gen_suggestions(&idx, &s, &[1.0, -5.0, 0.93], &iface);
    let slot = idx.slot_of_hole(reas::ir::YId(0));
    let y = sug.iter().find(|g| g.slot == slot).unwrap();
    assert!(y.value);
    assert!((y.cost - 0.43).abs() < 1e-12);
    // Fixed slots get no suggestion.
    let mut pinned = iface.clone();
    pinned.set(slot, Some(true));
    let s = abstract_num(&p, &idx, &pinned, SmoothParams::new(1.0));
    assert!(gen_suggestions(&idx, &s, &[1.0, -5.0], &pinned).iter().all(|g| g.slot != slot));
}

#[test]
fn uncertain_values_come_first() {
    let p = parse_program("(real u) (real v) (assert (or (>= u 0) (>= v 0)))").unwrap();
    let idx = p.collect_bool_nodes();
    let iface = InterfaceMap::empty(idx.len());
    let s = abstract_num(&p, &idx, &iface, SmoothParams::new(1.0));
    let sug = gen_suggestions(&idx, &s, &[0.01, -5.0], &iface);
    let pos = |c: f64| sug.iter().position(|g| (g.cost - c).abs() < 1e-12).unwrap();
    assert!(pos(0.01) < pos(5.0));
}

#[test]
fn conflict_threshold_is_strict() {
    let with = |k: usize| InterfaceMap::from_slots((0..8).map(|i| (i < k).then_some(true)).collect());
    assert!(is_conflict(&with(6), 5));
    assert!(!is_conflict(&with(0), 5));
    assert!(!is_conflict(&with(5), 5));
}

#[test]
fn conflict_negates_decisions() {
    let mut cnf = CnfProblem::new(3);
    cnf.interface = vec![true; 3];
    cnf.add_clause(&[Var(1).lit(false), Var(2).lit(true)]);
    let mut s = Solver::new(&cnf);
    s.set_suggestions(vec![Suggestion::new(Var(0), true, 0.0), Suggestion::new(Var(1), false, 0.1)]);
    let r1 = s.solve_incremental();
    let r2 = s.solve_incremental();
    assert_eq!(r1.newly_assigned.len() + r2.newly_assigned.len(), 2);
    let iface = InterfaceMap::from_slots(s.assignment().to_vec());
    let mut c = gen_conflict(&s, &iface);
    c.sort();
    let mut expect = vec![Var(0).lit(false), Var(1).lit(true)];
    expect.sort();
    assert_eq!(c, expect);
    s.add_soft_conflict(&c).unwrap();
}

#[test]
fn conflict_without_decisions_uses_every_entry() {
    let mut cnf = CnfProblem::new(2);
    cnf.interface = vec![true; 2];
    cnf.add_clause(&[Var(0).lit(true)]);
    cnf.add_clause(&[Var(1).lit(false)]);
    let s = Solver::new(&cnf);
    let iface = InterfaceMap::from_slots(s.assignment().to_vec());
    let mut c = gen_conflict(&s, &iface);
    c.sort();
    let mut expect = vec![Var(0).lit(false), Var(1).lit(true)];
    expect.sort();
    assert_eq!(c, expect);
}

#[test]
fn run_log_has_one_record_per_iteration() {
    let p = parse_program(BRANCH_CHAIN).unwrap();
    let mut buf = Vec::new();
    let r = Synthesizer::new(&p, quick(0)).with_run_log(Box::new(&mut buf)).run();
    let lines: Vec<serde_json::Value> = std::str::from_utf8(&buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), r.stats.numeric_calls);
    assert!(lines.iter().all(|l| l.get("interface_set").is_some()));
}

fn skeleton_has_model(cnf: &CnfProblem) -> bool {
    (0u32..1 << cnf.num_vars).any(|bits| {
        let m: Vec<bool> = (0..cnf.num_vars).map(|i| bits >> i & 1 == 1).collect();
        cnf.satisfied_by(&m)
    })
}

#[test]
fn random_programs_are_sound() {
    let cfg = RandomProgramConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sat = 0;
    for case in 0..60 {
        let p = random_program(&cfg, &mut rng);
        let r = solve(
            &p,
            CoreConfig {
                seed: case,
                restart_limit: Some(3),
                timeout: Duration::from_secs(5),
                ..CoreConfig::default()
            },
        );
        match r.status {
            SolveStatus::Sat => {
                let a: Assignment = r.assignment.unwrap();
                assert!(verify(&p, &a).unwrap(), "case {case}\n{p}\n{a:?}");
                sat += 1;
            }
            SolveStatus::Unsat => {
                let (cnf, _) = abstract_bool(&p, InterfaceScope::All);
                if cnf.num_vars <= 16 {
                    assert!(!skeleton_has_model(&cnf), "case {case}\n{p}");
                }
            }
            _ => {}
        }
    }
    assert!(sat > 20, "only {sat} of 60 solved");
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reas::sat::{parse_dimacs, write_dimacs, CnfProblem, Lit, SatStatus, Solver, Suggestion, Var};

fn random_3sat<R: Rng>(rng: &mut R) -> CnfProblem {
    let n = rng.gen_range(3..=12);
    // Clause/variable ratios around the phase transition give a mix of
    // SAT and UNSAT instances.
    let m = (n as f64 * rng.gen_range(3.0..5.5)) as usize;
    let mut cnf = CnfProblem::new(n);
    for _ in 0..m {
        let c: Vec<Lit> = (0..3)
            .map(|_| Var(rng.gen_range(0..n as u32)).lit(rng.gen_bool(0.5)))
            .collect();
        cnf.add_clause(&c);
    }
    cnf
}

fn brute_force_sat(cnf: &CnfProblem) -> bool {
    (0u32..1 << cnf.num_vars).any(|bits| {
        let model: Vec<bool> = (0..cnf.num_vars).map(|i| bits >> i & 1 == 1).collect();
        cnf.satisfied_by(&model)
    })
}

fn pigeonhole(pigeons: usize, holes: usize) -> CnfProblem {
    let v = |p: usize, h: usize| Var((p * holes + h) as u32);
    let mut cnf = CnfProblem::new(pigeons * holes);
    for p in 0..pigeons {
        let c: Vec<Lit> = (0..holes).map(|h| v(p, h).lit(true)).collect();
        cnf.add_clause(&c);
    }
    for h in 0..holes {
        for p in 0..pigeons {
            for q in p + 1..pigeons {
                cnf.add_clause(&[v(p, h).lit(false), v(q, h).lit(false)]);
            }
        }
    }
    cnf
}

#[test]
fn pigeonhole_is_hard_unsat() {
    let cnf = pigeonhole(3, 2);
    assert!(!brute_force_sat(&cnf));
    assert_eq!(Solver::new(&cnf).solve(), SatStatus::Unsat);
}

#[test]
fn soft_clause_blocking_only_model() {
    // Only model: v1 = 0, v2 = 1, v3 = 1.
    let text = "p cnf 3 3\n-1 0\n1 2 0\n-2 3 0\n";
    let cnf = parse_dimacs(text).unwrap();
    for _ in 0..3 {
        let mut s = Solver::new(&cnf);
        assert_eq!(s.solve(), SatStatus::Sat);
        s.add_soft_conflict(&[Lit::from_dimacs(-2), Lit::from_dimacs(-3)]).unwrap();
        assert_eq!(s.solve(), SatStatus::SoftUnsat);
        // SOFT_UNSAT is sticky until the soft learnts go.
        assert_eq!(s.solve_incremental().status, SatStatus::SoftUnsat);
        s.remove_soft_learnts();
        assert_eq!(s.solve(), SatStatus::Sat);
        assert_eq!(s.model().unwrap(), vec![false, true, true]);
    }
}

#[test]
fn dimacs_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let cnf = random_3sat(&mut rng);
        let back = parse_dimacs(&write_dimacs(&cnf)).unwrap();
        assert_eq!(back.num_vars, cnf.num_vars);
        assert_eq!(back.clauses, cnf.clauses);
    }
}

#[test]
fn dimacs_rejects_bad_header() {
    assert!(parse_dimacs("p dnf 2 1\n1 2 0\n").is_err());
    assert!(parse_dimacs("p cnf 2 1\n1 5 0\n").is_err());
}

#[test]
fn suggestions_are_followed_in_cost_order() {
    let mut cnf = CnfProblem::new(3);
    cnf.interface = vec![true; 3];
    let mut s = Solver::new(&cnf);
    s.set_suggestions(vec![
        Suggestion::new(Var(2), false, 0.5),
        Suggestion::new(Var(0), true, 0.1),
        Suggestion::new(Var(1), true, 3.0),
    ]);
    let order: Vec<Lit> = (0..3).flat_map(|_| s.solve_incremental().newly_assigned).collect();
    assert_eq!(order, vec![Var(0).lit(true), Var(2).lit(false), Var(1).lit(true)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn agrees_with_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cnf = random_3sat(&mut rng);
        let mut s = Solver::new(&cnf);
        let status = s.solve();
        let expect = brute_force_sat(&cnf);
        prop_assert_eq!(status == SatStatus::Sat, expect);
        prop_assert_ne!(status, SatStatus::SoftUnsat);
        if expect {
            prop_assert!(cnf.satisfied_by(&s.model().unwrap()));
        }
    }

    #[test]
    fn each_report_assigns_interface_variables(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cnf = random_3sat(&mut rng);
        cnf.interface = (0..cnf.num_vars).map(|_| rng.gen_bool(0.5)).collect();
        let mut s = Solver::new(&cnf);
        for _ in 0..1000 {
            let r = s.solve_incremental();
            if r.status != SatStatus::Sat || r.complete {
                break;
            }
            // Every in-progress report carries at least one interface
            // variable that is assigned now.
            prop_assert!(!r.newly_assigned.is_empty());
            for l in &r.newly_assigned {
                prop_assert!(cnf.interface[l.var().index()]);
                prop_assert_eq!(r.interface[l.var().index()], Some(l.is_positive()));
            }
        }
    }

    #[test]
    fn unsat_is_never_caused_by_soft_clauses(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cnf = random_3sat(&mut rng);
        let expect = brute_force_sat(&cnf);
        let mut s = Solver::new(&cnf);
        // Inject soft conflicts that negate the current decisions.
        for _ in 0..20 {
            let r = s.solve_incremental();
            if r.status != SatStatus::Sat {
                break;
            }
            if rng.gen_bool(0.3) {
                let clause: Vec<Lit> = (0..cnf.num_vars)
                    .map(|v| Var(v as u32))
                    .filter(|&v| s.is_decision(v))
                    .map(|v| v.lit(!s.value(v).unwrap()))
                    .collect();
                if !clause.is_empty() {
                    s.add_soft_conflict(&clause).unwrap();
                }
            }
        }
        let status = s.solve();
        if status == SatStatus::Unsat {
            prop_assert!(!expect);
        }
        if status == SatStatus::Sat {
            prop_assert!(cnf.satisfied_by(&s.model().unwrap()));
        }
        s.remove_soft_learnts();
        s.restart();
        prop_assert_eq!(s.solve() == SatStatus::Sat, expect);
    }
}

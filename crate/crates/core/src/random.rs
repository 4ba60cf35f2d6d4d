//! Random small programs and assignments, for property tests and fuzzing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ir::{Assignment, Bool, InterfaceMap, Node, OpKind, Program, ProgramBuilder, Real, YId};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomProgramConfig {
    pub max_reals: usize,
    pub max_bools: usize,
    /// Maximum nesting depth of expressions.
    pub max_depth: usize,
    pub max_asserts: usize,
    /// Box bounds declared for every real unknown.
    pub bounds: (f64, f64),
    /// Range of literal constants.
    pub const_range: (f64, f64),
    /// Operations that may appear.
    pub ops: Vec<OpKind>,
}

impl Default for RandomProgramConfig {
    fn default() -> Self {
        RandomProgramConfig {
            max_reals: 3,
            max_bools: 2,
            max_depth: 4,
            max_asserts: 3,
            bounds: (-3.0, 3.0),
            const_range: (-3.0, 3.0),
            ops: vec![
                OpKind::Add,
                OpKind::Sub,
                OpKind::Mul,
                OpKind::Neg,
                OpKind::Sin,
                OpKind::Cos,
                OpKind::Tanh,
            ],
        }
    }
}

struct Gen<'a, R> {
    cfg: &'a RandomProgramConfig,
    rng: &'a mut R,
    b: ProgramBuilder,
    reals: Vec<Real>,
    holes: Vec<YId>,
}

impl<R: Rng> Gen<'_, R> {
    fn leaf(&mut self) -> Real {
        if self.rng.gen_bool(0.7) {
            *self.reals.choose(self.rng).expect("at least one real unknown")
        } else {
            let (lo, hi) = self.cfg.const_range;
            let c = self.rng.gen_range(lo..=hi);
            // Short literals keep printed programs readable.
            self.b.constant((c * 100.0).round() / 100.0)
        }
    }

    fn real(&mut self, depth: usize) -> Real {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let choice = self.rng.gen_range(0..10);
        if choice < 2 {
            let c = self.boolean(depth - 1);
            let t = self.real(depth - 1);
            let e = self.real(depth - 1);
            return self.b.ite(c, t, e);
        }
        if choice < 3 && !self.holes.is_empty() {
            let y = *self.holes.choose(self.rng).expect("non-empty");
            let t = self.real(depth - 1);
            let e = self.real(depth - 1);
            return self.b.iteh(y, t, e);
        }
        let kind = *self.cfg.ops.choose(self.rng).expect("at least one op");
        let a = self.real(depth - 1);
        if kind.arity() == 1 {
            self.b.op(kind, &[a])
        } else {
            let c = self.real(depth - 1);
            self.b.op(kind, &[a, c])
        }
    }

    fn boolean(&mut self, depth: usize) -> Bool {
        let choice = if depth == 0 { 0 } else { self.rng.gen_range(0..6) };
        match choice {
            0..=2 => {
                let e = self.real(depth.saturating_sub(1));
                self.b.ge0(e)
            }
            3 => {
                let a = self.boolean(depth - 1);
                let c = self.boolean(depth - 1);
                self.b.and(a, c)
            }
            4 => {
                let a = self.boolean(depth - 1);
                self.b.not(a)
            }
            _ => {
                let a = self.boolean(depth - 1);
                let c = self.boolean(depth - 1);
                self.b.or(a, c)
            }
        }
    }
}

/// Draws a program with 1..=`max_reals` bounded real unknowns,
/// 0..=`max_bools` Boolean unknowns and 1..=`max_asserts` asserts.
pub fn random_program<R: Rng>(cfg: &RandomProgramConfig, rng: &mut R) -> Program {
    let nx = rng.gen_range(1..=cfg.max_reals.max(1));
    let ny = rng.gen_range(0..=cfg.max_bools);
    let na = rng.gen_range(1..=cfg.max_asserts.max(1));
    let mut b = ProgramBuilder::new();
    let reals = (0..nx)
        .map(|i| b.real_unknown(&format!("x{}", i + 1), Some(cfg.bounds)))
        .collect();
    let holes = (0..ny).map(|i| b.bool_unknown(&format!("y{}", i + 1))).collect();
    let mut g = Gen {
        cfg,
        rng,
        b,
        reals,
        holes,
    };
    for _ in 0..na {
        let a = g.boolean(cfg.max_depth);
        g.b.assert(a);
    }
    g.b.finish()
}

/// Uniform assignment: reals within their bounds (or `fallback`), Booleans
/// by fair coin.
pub fn random_assignment<R: Rng>(p: &Program, fallback: (f64, f64), rng: &mut R) -> Assignment {
    let reals = p
        .real_unknowns()
        .iter()
        .map(|d| {
            let (lo, hi) = d.bounds.unwrap_or(fallback);
            rng.gen_range(lo..=hi)
        })
        .collect();
    let bools = (0..p.bool_unknowns().len()).map(|_| rng.gen_bool(0.5)).collect();
    Assignment::new(reals, bools)
}

/// Smallest `|e|` over the comparison atoms `e >= 0` of `p` under `sigma`,
/// with every atom evaluated (including ones in unselected branches).
/// `None` if some atom cannot be evaluated.
pub fn atom_margin(p: &Program, sigma: &Assignment) -> Option<f64> {
    let mut values: Vec<f64> = vec![0.0; p.len()];
    let mut margin = f64::INFINITY;
    for (i, n) in p.nodes().iter().enumerate() {
        let v = match n {
            Node::Unknown(x) => sigma.reals[x.index()],
            Node::Const(c) => *c,
            Node::Op(kind, args) => {
                let a: Vec<f64> = args.iter().map(|a| values[a.index()]).collect();
                kind.eval_exact(&a)?
            }
            Node::IteB { cond, then, els } => {
                if values[cond.index()] >= 0.0 {
                    values[then.index()]
                } else {
                    values[els.index()]
                }
            }
            Node::IteH { cond, then, els } => {
                if sigma.bools[cond.index()] {
                    values[then.index()]
                } else {
                    values[els.index()]
                }
            }
            Node::Ge(e) => {
                let v = values[e.index()];
                margin = margin.min(v.abs());
                // Booleans are stored as +1 / -1.
                if v >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Node::And(a, b) => values[a.index()].min(values[b.index()]),
            Node::Not(b) => -values[b.index()],
        };
        if !v.is_finite() {
            return None;
        }
        values[i] = v;
    }
    Some(margin)
}

/// Interface mapping over `p` where each slot is fixed, with probability
/// `density`, to a fair coin.
pub fn random_interface<R: Rng>(p: &Program, density: f64, rng: &mut R) -> InterfaceMap {
    let idx = p.collect_bool_nodes();
    let slots = (0..idx.len())
        .map(|_| rng.gen_bool(density).then(|| rng.gen_bool(0.5)))
        .collect();
    InterfaceMap::from_slots(slots)
}

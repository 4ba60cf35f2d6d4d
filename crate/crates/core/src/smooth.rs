//! Numerical abstraction: translates a program and an interface mapping into
//! a conjunction of smooth constraints `e >= 0` over the real unknowns and
//! relaxed Boolean unknowns.
//!
//! Boolean expressions become *P-distances*: real values that are positive
//! when the expression holds. Conditionals are blended with a sigmoid of
//! steepness `beta`. Entries of the interface mapping that are already fixed
//! replace the expression by the saturated constant `±K` and emit a
//! constraint forcing the expression to agree.

use std::collections::HashMap;
use std::fmt::{self, Write};
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::ir::{BoolIndex, InterfaceMap, Node, NodeId, OpKind, Program, YId};

/// Saturation constant substituted for pinned Boolean expressions.
pub const SATURATION: f64 = 100.0;
/// Default numeric slack: `e >= 0` is accepted when `e >= -eps`.
pub const DEFAULT_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothParams {
    pub beta: f64,
    pub eps: f64,
    pub k: f64,
    pub delta: f64,
}

impl SmoothParams {
    pub fn new(beta: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        SmoothParams {
            beta,
            eps: DEFAULT_EPS,
            k: SATURATION,
            delta: 0.1 / beta,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

/// `1 / (1 + exp(-beta * x))`, evaluated without overflow.
pub fn smooth_transition(x: f64, beta: f64) -> f64 {
    let z = beta * x;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Index into a [`SmoothArena`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SId(pub u32);

impl SId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Node of the smoothed language: no conditionals, only arithmetic and the
/// sigmoid transition.
#[derive(Debug, Clone, Copy)]
pub enum SmoothNode {
    /// Real variable: program unknowns first, then relaxed Boolean unknowns.
    Var(u32),
    Const(f64),
    /// Unary ops repeat their argument in the second position.
    Op(OpKind, [SId; 2]),
    Sigmoid { arg: SId, beta: f64 },
}

impl PartialEq for SmoothNode {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SmoothNode::Var(a), SmoothNode::Var(b)) => a == b,
            (SmoothNode::Const(a), SmoothNode::Const(b)) => a.to_bits() == b.to_bits(),
            (SmoothNode::Op(k1, a1), SmoothNode::Op(k2, a2)) => k1 == k2 && a1 == a2,
            (
                SmoothNode::Sigmoid { arg: a1, beta: b1 },
                SmoothNode::Sigmoid { arg: a2, beta: b2 },
            ) => a1 == a2 && b1.to_bits() == b2.to_bits(),
            _ => false,
        }
    }
}

impl Eq for SmoothNode {}

impl Hash for SmoothNode {
    fn hash<H: Hasher>(&self, h: &mut H) {
        std::mem::discriminant(self).hash(h);
        match self {
            SmoothNode::Var(v) => v.hash(h),
            SmoothNode::Const(c) => c.to_bits().hash(h),
            SmoothNode::Op(k, a) => {
                k.hash(h);
                a.hash(h);
            }
            SmoothNode::Sigmoid { arg, beta } => {
                arg.hash(h);
                beta.to_bits().hash(h);
            }
        }
    }
}

/// Hash-consed store of smoothed nodes with constant folding and a few
/// algebraic identities (`x+0`, `x*1`, `x*0`, `--x`).
#[derive(Debug, Clone, Default)]
pub struct SmoothArena {
    nodes: Vec<SmoothNode>,
    intern: HashMap<SmoothNode, SId>,
}

impl SmoothArena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[SmoothNode] {
        &self.nodes
    }

    pub fn node(&self, id: SId) -> SmoothNode {
        self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn mk(&mut self, n: SmoothNode) -> SId {
        if let Some(&id) = self.intern.get(&n) {
            return id;
        }
        let id = SId(self.nodes.len() as u32);
        self.nodes.push(n);
        self.intern.insert(n, id);
        id
    }

    pub fn as_const(&self, id: SId) -> Option<f64> {
        match self.nodes[id.index()] {
            SmoothNode::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn var(&mut self, v: u32) -> SId {
        self.mk(SmoothNode::Var(v))
    }

    pub fn constant(&mut self, c: f64) -> SId {
        let c = if c == 0.0 { 0.0 } else { c };
        self.mk(SmoothNode::Const(c))
    }

    pub fn op(&mut self, kind: OpKind, a: SId, b: SId) -> SId {
        let b = if kind.arity() == 1 { a } else { b };
        let (ca, cb) = (self.as_const(a), self.as_const(b));
        if let (Some(x), Some(y)) = (ca, cb) {
            let v = kind.eval_smooth(&[x, y]);
            if v.is_finite() {
                return self.constant(v);
            }
        }
        match kind {
            OpKind::Add if ca == Some(0.0) => return b,
            OpKind::Add | OpKind::Sub if cb == Some(0.0) => return a,
            OpKind::Sub if ca == Some(0.0) => return self.op(OpKind::Neg, b, b),
            OpKind::Mul if ca == Some(1.0) => return b,
            OpKind::Mul if cb == Some(1.0) => return a,
            OpKind::Mul if ca == Some(0.0) || cb == Some(0.0) => return self.constant(0.0),
            OpKind::Neg => {
                if let SmoothNode::Op(OpKind::Neg, [inner, _]) = self.nodes[a.index()] {
                    return inner;
                }
            }
            _ => {}
        }
        self.mk(SmoothNode::Op(kind, [a, b]))
    }

    pub fn add(&mut self, a: SId, b: SId) -> SId {
        self.op(OpKind::Add, a, b)
    }

    pub fn sub(&mut self, a: SId, b: SId) -> SId {
        self.op(OpKind::Sub, a, b)
    }

    pub fn mul(&mut self, a: SId, b: SId) -> SId {
        self.op(OpKind::Mul, a, b)
    }

    pub fn neg(&mut self, a: SId) -> SId {
        self.op(OpKind::Neg, a, a)
    }

    pub fn sigmoid(&mut self, arg: SId, beta: f64) -> SId {
        if let Some(c) = self.as_const(arg) {
            return self.constant(smooth_transition(c, beta));
        }
        self.mk(SmoothNode::Sigmoid { arg, beta })
    }

    /// `a * t + b * (1 - t)`, collapsing to a branch when `t` is exactly 0
    /// or 1 or both branches are the same node.
    pub fn blend(&mut self, a: SId, b: SId, t: SId) -> SId {
        if a == b {
            return a;
        }
        match self.as_const(t) {
            Some(c) if c == 1.0 => return a,
            Some(c) if c == 0.0 => return b,
            _ => {}
        }
        let one = self.constant(1.0);
        let at = self.mul(a, t);
        let u = self.sub(one, t);
        let bu = self.mul(b, u);
        self.add(at, bu)
    }
}

/// The `MatchNUpdate` step: a fixed interface value replaces `e` by `±k` and
/// yields the constraint that forces `e` to agree with it.
pub fn match_n_update(arena: &mut SmoothArena, e: SId, v: Option<bool>, k: f64) -> (SId, Option<SId>) {
    match v {
        None => (e, None),
        Some(true) => (arena.constant(k), Some(e)),
        Some(false) => {
            let ne = arena.neg(e);
            (arena.constant(-k), Some(ne))
        }
    }
}

/// Why a constraint is part of the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// The `k`-th program assert.
    Assert(usize),
    /// Interface slot fixed to `value`.
    Pin { slot: usize, value: bool },
    /// Range/integrality relaxation of a Boolean unknown.
    Relaxation(YId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraint {
    /// Meaning: `node >= 0` (accepted at `>= -eps`).
    pub node: SId,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmoothEvalError {
    #[error("non-finite value at smoothed node {0:?}")]
    NonFinite(SId),
}

/// Conjunction of smooth constraints produced by [`abstract_num`].
#[derive(Debug, Clone)]
pub struct SmoothedConstraintSet {
    pub arena: SmoothArena,
    pub constraints: Vec<Constraint>,
    pub params: SmoothParams,
    num_program_vars: usize,
    relaxed: Vec<Option<u32>>,
    num_vars: usize,
    slot_value: Vec<Option<SId>>,
}

impl SmoothedConstraintSet {
    /// Program real unknowns plus relaxed Boolean unknowns.
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_program_vars(&self) -> usize {
        self.num_program_vars
    }

    /// Variable standing for Boolean unknown `y`, if `y` was relaxed.
    pub fn relaxed_var(&self, y: YId) -> Option<usize> {
        self.relaxed.get(y.index()).copied().flatten().map(|v| v as usize)
    }

    /// Smoothed P-distance of the Boolean node in `slot` before pinning (or
    /// the relaxed variable for a Boolean unknown).
    pub fn slot_value(&self, slot: usize) -> Option<SId> {
        self.slot_value.get(slot).copied().flatten()
    }

    /// Values of every arena node at `x`.
    pub fn eval_nodes(&self, x: &[f64]) -> Result<Vec<f64>, SmoothEvalError> {
        assert_eq!(x.len(), self.num_vars, "assignment length");
        let mut val = Vec::with_capacity(self.arena.len());
        for (i, n) in self.arena.nodes().iter().enumerate() {
            let v = match *n {
                SmoothNode::Var(k) => x[k as usize],
                SmoothNode::Const(c) => c,
                SmoothNode::Op(kind, [a, b]) => kind.eval_smooth(&[val[a.index()], val[b.index()]]),
                SmoothNode::Sigmoid { arg, beta } => smooth_transition(val[arg.index()], beta),
            };
            if !v.is_finite() {
                return Err(SmoothEvalError::NonFinite(SId(i as u32)));
            }
            val.push(v);
        }
        Ok(val)
    }

    pub fn eval_smooth(&self, n: SId, x: &[f64]) -> Result<f64, SmoothEvalError> {
        Ok(self.eval_nodes(x)?[n.index()])
    }

    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>, SmoothEvalError> {
        let val = self.eval_nodes(x)?;
        Ok(self.constraints.iter().map(|c| val[c.node.index()]).collect())
    }

    /// Largest violation `max(0, -c_i)` over all constraints.
    pub fn residual(&self, x: &[f64]) -> Result<f64, SmoothEvalError> {
        Ok(self
            .constraint_values(x)?
            .into_iter()
            .fold(0.0, |m, c| m.max(-c)))
    }

    pub fn is_satisfied(&self, x: &[f64]) -> bool {
        matches!(self.residual(x), Ok(r) if r <= self.params.eps)
    }

    /// S-expression listing of the constraints, with provenance comments.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "; beta={} eps={} K={} delta={}",
            self.params.beta, self.params.eps, self.params.k, self.params.delta
        );
        for (i, n) in self.arena.nodes().iter().enumerate() {
            let _ = writeln!(s, "(define t{i} {})", NodeText(n));
        }
        for c in &self.constraints {
            let _ = writeln!(s, "(>= t{} 0) ; {:?}", c.node.0, c.origin);
        }
        s
    }

    /// Structural rendering of a node as an expression tree (for tests and
    /// small dumps; exponential on heavily shared DAGs).
    pub fn render(&self, id: SId) -> String {
        match self.arena.node(id) {
            SmoothNode::Var(v) => format!("v{v}"),
            SmoothNode::Const(c) => format!("{c:?}"),
            SmoothNode::Op(kind, [a, b]) => {
                if kind.arity() == 1 {
                    format!("({} {})", kind.symbol(), self.render(a))
                } else {
                    format!("({} {} {})", kind.symbol(), self.render(a), self.render(b))
                }
            }
            SmoothNode::Sigmoid { arg, beta } => format!("(sigmoid {beta:?} {})", self.render(arg)),
        }
    }
}

struct NodeText<'a>(&'a SmoothNode);

impl fmt::Display for NodeText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self.0 {
            SmoothNode::Var(v) => write!(f, "v{v}"),
            SmoothNode::Const(c) => write!(f, "{c:?}"),
            SmoothNode::Op(kind, [a, _]) if kind.arity() == 1 => {
                write!(f, "({} t{})", kind.symbol(), a.0)
            }
            SmoothNode::Op(kind, [a, b]) => write!(f, "({} t{} t{})", kind.symbol(), a.0, b.0),
            SmoothNode::Sigmoid { arg, beta } => write!(f, "(sigmoid {beta:?} t{})", arg.0),
        }
    }
}

/// Builds the smoothed constraint set for `p` under interface mapping `iface`
/// (indexed by `index`).
///
/// Every reachable node is translated once, in arena order. Constraints from
/// fixed interface entries come first (arena order), then one constraint per
/// assert; constraints that fold to a non-negative constant are dropped.
pub fn abstract_num(
    p: &Program,
    index: &BoolIndex,
    iface: &InterfaceMap,
    params: SmoothParams,
) -> SmoothedConstraintSet {
    assert_eq!(index.len(), iface.len(), "interface map does not match the program");
    let reach = p.reachable();
    let nx = p.real_unknowns().len();
    let mut arena = SmoothArena::new();
    let mut memo: Vec<Option<SId>> = vec![None; p.len()];
    let mut relaxed: Vec<Option<u32>> = vec![None; p.bool_unknowns().len()];
    let mut num_vars = nx;
    let mut slot_value = vec![None; index.len()];
    let mut pins: Vec<Constraint> = Vec::new();
    let mut relax: Vec<Constraint> = Vec::new();
    let k = params.k;

    for (i, node) in p.nodes().iter().enumerate() {
        if !reach[i] {
            continue;
        }
        let m = |id: NodeId| memo[id.index()].expect("children precede parents");
        let out = match node {
            Node::Unknown(x) => arena.var(x.0),
            Node::Const(c) => arena.constant(*c),
            Node::Op(kind, args) => {
                let a = m(args[0]);
                let b = if args.len() > 1 { m(args[1]) } else { a };
                arena.op(*kind, a, b)
            }
            Node::IteB { cond, then, els } => {
                let (c, t, e) = (m(*cond), m(*then), m(*els));
                match arena.as_const(c) {
                    Some(v) if v == k => t,
                    Some(v) if v == -k => e,
                    _ => {
                        let s = arena.sigmoid(c, params.beta);
                        arena.blend(t, e, s)
                    }
                }
            }
            Node::IteH { cond, then, els } => {
                let (t, e) = (m(*then), m(*els));
                let slot = index.slot_of_hole(*cond);
                match iface.get(slot) {
                    Some(true) => t,
                    Some(false) => e,
                    None => {
                        let v = match relaxed[cond.index()] {
                            Some(v) => v,
                            None => {
                                let v = num_vars as u32;
                                num_vars += 1;
                                relaxed[cond.index()] = Some(v);
                                let r = arena.var(v);
                                slot_value[slot] = Some(r);
                                let one = arena.constant(1.0);
                                let delta = arena.constant(params.delta);
                                let upper = arena.sub(one, r);
                                let spread = arena.mul(r, upper);
                                let tight = arena.sub(delta, spread);
                                for n in [r, upper, tight] {
                                    relax.push(Constraint {
                                        node: n,
                                        origin: Origin::Relaxation(*cond),
                                    });
                                }
                                v
                            }
                        };
                        let r = arena.var(v);
                        arena.blend(t, e, r)
                    }
                }
            }
            Node::Ge(_) | Node::Not(_) | Node::And(_, _) => {
                let raw = match node {
                    Node::Ge(e) => m(*e),
                    Node::Not(b) => {
                        let b = m(*b);
                        arena.neg(b)
                    }
                    Node::And(a, b) => {
                        let (a, b) = (m(*a), m(*b));
                        match (arena.as_const(a), arena.as_const(b)) {
                            (Some(x), _) if x == -k => a,
                            (_, Some(y)) if y == -k => b,
                            (Some(x), _) if x == k => b,
                            (_, Some(y)) if y == k => a,
                            _ => {
                                // min(a, b) as ite(b - a >= 0, a, b)
                                let d = arena.sub(b, a);
                                let t = arena.sigmoid(d, params.beta);
                                arena.blend(a, b, t)
                            }
                        }
                    }
                    _ => unreachable!(),
                };
                let slot = index
                    .slot_of_node(NodeId(i as u32))
                    .expect("reachable Boolean node has a slot");
                slot_value[slot] = Some(raw);
                let value = iface.get(slot);
                let (out, c) = match_n_update(&mut arena, raw, value, k);
                if let (Some(c), Some(value)) = (c, value) {
                    pins.push(Constraint {
                        node: c,
                        origin: Origin::Pin { slot, value },
                    });
                }
                out
            }
        };
        memo[i] = Some(out);
    }

    let mut constraints = pins;
    constraints.extend(relax);
    for (kx, a) in p.asserts().iter().enumerate() {
        constraints.push(Constraint {
            node: memo[a.index()].expect("assert is reachable"),
            origin: Origin::Assert(kx),
        });
    }
    constraints.retain(|c| !matches!(arena.as_const(c.node), Some(v) if v >= 0.0));

    SmoothedConstraintSet {
        arena,
        constraints,
        params,
        num_program_vars: nx,
        relaxed,
        num_vars,
        slot_value,
    }
}

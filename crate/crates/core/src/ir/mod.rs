//! The core language: real expressions, Boolean expressions and Boolean
//! unknowns, stored as a hash-consed DAG.
//!
//! Every node lives in a single arena owned by [`Program`]. Children always
//! have smaller ids than their parents, so a forward pass over the arena is a
//! topological traversal.

mod eval;
mod parse;
mod print;

pub use eval::{eval_bool, eval_real, verify, EvalError, Evaluator};
pub use parse::{parse_program, ParseError};

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Index of a node in the program arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Real unknown ("real hole").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct XId(pub u32);

impl XId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Boolean unknown ("Boolean hole").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YId(pub u32);

impl YId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Guard used by the continuous approximations of `div` and `sqrt`.
pub const GUARD_MU: f64 = 1e-9;

/// Real-valued operations. Each carries its exact semantics, its smooth
/// (guarded) semantics and the partial derivatives of the smooth semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sin,
    Cos,
    Sqrt,
    Tanh,
    Exp,
}

impl OpKind {
    pub const ALL: [OpKind; 10] = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::Div,
        OpKind::Neg,
        OpKind::Sin,
        OpKind::Cos,
        OpKind::Sqrt,
        OpKind::Tanh,
        OpKind::Exp,
    ];

    pub fn arity(self) -> usize {
        match self {
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div => 2,
            _ => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            OpKind::Add => "+",
            OpKind::Sub => "-",
            OpKind::Mul => "*",
            OpKind::Div => "/",
            OpKind::Neg => "-",
            OpKind::Sin => "sin",
            OpKind::Cos => "cos",
            OpKind::Sqrt => "sqrt",
            OpKind::Tanh => "tanh",
            OpKind::Exp => "exp",
        }
    }

    /// Exact semantics. `None` means the arguments are outside the domain.
    pub fn eval_exact(self, a: &[f64]) -> Option<f64> {
        Some(match self {
            OpKind::Div => {
                if a[1] == 0.0 {
                    return None;
                }
                a[0] / a[1]
            }
            OpKind::Sqrt => {
                if a[0] < 0.0 {
                    return None;
                }
                a[0].sqrt()
            }
            _ => self.eval_smooth(a),
        })
    }

    /// Continuous semantics used by the numerical side. Identical to the exact
    /// semantics except for `div(a, b) = a*b/(b^2+mu)` and
    /// `sqrt(a) = sqrt(max(a, mu))`.
    pub fn eval_smooth(self, a: &[f64]) -> f64 {
        match self {
            OpKind::Add => a[0] + a[1],
            OpKind::Sub => a[0] - a[1],
            OpKind::Mul => a[0] * a[1],
            OpKind::Div => a[0] * a[1] / (a[1] * a[1] + GUARD_MU),
            OpKind::Neg => -a[0],
            OpKind::Sin => a[0].sin(),
            OpKind::Cos => a[0].cos(),
            OpKind::Sqrt => a[0].max(GUARD_MU).sqrt(),
            OpKind::Tanh => a[0].tanh(),
            OpKind::Exp => a[0].exp(),
        }
    }

    /// Partial derivatives of [`eval_smooth`](Self::eval_smooth) with respect
    /// to each argument. `value` is the already computed result.
    pub fn partials(self, a: &[f64], value: f64) -> [f64; 2] {
        match self {
            OpKind::Add => [1.0, 1.0],
            OpKind::Sub => [1.0, -1.0],
            OpKind::Mul => [a[1], a[0]],
            OpKind::Div => {
                let d = a[1] * a[1] + GUARD_MU;
                [a[1] / d, a[0] * (GUARD_MU - a[1] * a[1]) / (d * d)]
            }
            OpKind::Neg => [-1.0, 0.0],
            OpKind::Sin => [a[0].cos(), 0.0],
            OpKind::Cos => [-a[0].sin(), 0.0],
            OpKind::Sqrt => {
                if a[0] > GUARD_MU {
                    [0.5 / value, 0.0]
                } else {
                    [0.0, 0.0]
                }
            }
            OpKind::Tanh => [1.0 - value * value, 0.0],
            OpKind::Exp => [value, 0.0],
        }
    }
}

/// A node of the core language.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Unknown(XId),
    Const(f64),
    Op(OpKind, Vec<NodeId>),
    /// `ite(B, E1, E2)` with a Boolean-expression condition.
    IteB {
        cond: NodeId,
        then: NodeId,
        els: NodeId,
    },
    /// `ite(H, E1, E2)` with a Boolean-unknown condition.
    IteH {
        cond: YId,
        then: NodeId,
        els: NodeId,
    },
    /// `e >= 0`
    Ge(NodeId),
    And(NodeId, NodeId),
    Not(NodeId),
}

// Constants are normalized (no NaN, no negative zero) before interning, so
// bitwise hashing agrees with `==`.
impl Eq for Node {}

impl Hash for Node {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Node::Unknown(x) => x.hash(state),
            Node::Const(c) => c.to_bits().hash(state),
            Node::Op(k, args) => {
                k.hash(state);
                args.hash(state);
            }
            Node::IteB { cond, then, els } => (cond, then, els).hash(state),
            Node::IteH { cond, then, els } => (cond, then, els).hash(state),
            Node::Ge(e) => e.hash(state),
            Node::And(a, b) => (a, b).hash(state),
            Node::Not(b) => b.hash(state),
        }
    }
}

impl Node {
    pub fn is_bool(&self) -> bool {
        matches!(self, Node::Ge(_) | Node::And(..) | Node::Not(_))
    }

    /// Child node ids (the condition of an `IteH` is not a node).
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            Node::Unknown(_) | Node::Const(_) => Vec::new(),
            Node::Op(_, args) => args.clone(),
            Node::IteB { cond, then, els } => vec![*cond, *then, *els],
            Node::IteH { then, els, .. } => vec![*then, *els],
            Node::Ge(e) | Node::Not(e) => vec![*e],
            Node::And(a, b) => vec![*a, *b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDecl {
    pub name: String,
    /// Box bounds; the parser also emits them as two ordinary asserts.
    pub bounds: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoolDecl {
    pub name: String,
}

/// Typed handle to a real-valued node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Real(pub NodeId);

/// Typed handle to a Boolean node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bool(pub NodeId);

/// A synthesis problem `assert(B1, ..., Bk)` over declared unknowns.
#[derive(Debug, Clone)]
pub struct Program {
    nodes: Vec<Node>,
    asserts: Vec<NodeId>,
    bound_assert: Vec<bool>,
    reals: Vec<RealDecl>,
    bools: Vec<BoolDecl>,
}

impl Program {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn asserts(&self) -> &[NodeId] {
        &self.asserts
    }

    /// Whether assert `k` was generated from a declaration's box bounds.
    pub fn is_bound_assert(&self, k: usize) -> bool {
        self.bound_assert[k]
    }

    pub fn real_unknowns(&self) -> &[RealDecl] {
        &self.reals
    }

    pub fn bool_unknowns(&self) -> &[BoolDecl] {
        &self.bools
    }

    pub fn real_by_name(&self, name: &str) -> Option<XId> {
        self.reals
            .iter()
            .position(|d| d.name == name)
            .map(|i| XId(i as u32))
    }

    pub fn bool_by_name(&self, name: &str) -> Option<YId> {
        self.bools
            .iter()
            .position(|d| d.name == name)
            .map(|i| YId(i as u32))
    }

    /// Nodes reachable from the asserts.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        for a in &self.asserts {
            seen[a.index()] = true;
        }
        // Parents have larger ids than children: one backward sweep suffices.
        for i in (0..self.nodes.len()).rev() {
            if seen[i] {
                for c in self.nodes[i].children() {
                    seen[c.index()] = true;
                }
            }
        }
        seen
    }

    /// Boolean expressions and Boolean unknowns, in arena order followed by
    /// unknown order. This list indexes every [`InterfaceMap`].
    pub fn collect_bool_nodes(&self) -> BoolIndex {
        let reach = self.reachable();
        let mut targets = Vec::new();
        let mut node_slot = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if reach[i] && n.is_bool() {
                node_slot.insert(NodeId(i as u32), targets.len());
                targets.push(BoolTarget::Node(NodeId(i as u32)));
            }
        }
        let mut hole_slot = Vec::with_capacity(self.bools.len());
        for y in 0..self.bools.len() {
            hole_slot.push(targets.len());
            targets.push(BoolTarget::Hole(YId(y as u32)));
        }
        BoolIndex {
            targets,
            node_slot,
            hole_slot,
        }
    }

    /// Structural equality of the assert lists and declarations, independent
    /// of arena numbering.
    pub fn structurally_eq(&self, other: &Program) -> bool {
        if self.reals != other.reals || self.bools != other.bools {
            return false;
        }
        if self.asserts.len() != other.asserts.len() {
            return false;
        }
        let mut memo: HashMap<(NodeId, NodeId), bool> = HashMap::new();
        self.asserts
            .iter()
            .zip(&other.asserts)
            .all(|(&a, &b)| self.node_eq(other, a, b, &mut memo))
    }

    fn node_eq(
        &self,
        other: &Program,
        a: NodeId,
        b: NodeId,
        memo: &mut HashMap<(NodeId, NodeId), bool>,
    ) -> bool {
        if let Some(&r) = memo.get(&(a, b)) {
            return r;
        }
        let r = match (self.node(a), other.node(b)) {
            (Node::Unknown(x), Node::Unknown(y)) => x == y,
            (Node::Const(x), Node::Const(y)) => x.to_bits() == y.to_bits(),
            (Node::Op(k1, a1), Node::Op(k2, a2)) => {
                k1 == k2
                    && a1.len() == a2.len()
                    && a1
                        .iter()
                        .zip(a2)
                        .all(|(&c, &d)| self.node_eq(other, c, d, memo))
            }
            (
                Node::IteB {
                    cond: c1,
                    then: t1,
                    els: e1,
                },
                Node::IteB {
                    cond: c2,
                    then: t2,
                    els: e2,
                },
            ) => {
                self.node_eq(other, *c1, *c2, memo)
                    && self.node_eq(other, *t1, *t2, memo)
                    && self.node_eq(other, *e1, *e2, memo)
            }
            (
                Node::IteH {
                    cond: c1,
                    then: t1,
                    els: e1,
                },
                Node::IteH {
                    cond: c2,
                    then: t2,
                    els: e2,
                },
            ) => {
                c1 == c2 && self.node_eq(other, *t1, *t2, memo) && self.node_eq(other, *e1, *e2, memo)
            }
            (Node::Ge(x), Node::Ge(y)) | (Node::Not(x), Node::Not(y)) => {
                self.node_eq(other, *x, *y, memo)
            }
            (Node::And(a1, b1), Node::And(a2, b2)) => {
                self.node_eq(other, *a1, *a2, memo) && self.node_eq(other, *b1, *b2, memo)
            }
            _ => false,
        };
        memo.insert((a, b), r);
        r
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_program(self, f)
    }
}

/// Something the interface mapping assigns a value to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolTarget {
    Node(NodeId),
    Hole(YId),
}

/// Dense numbering of every Boolean expression and Boolean unknown.
#[derive(Debug, Clone)]
pub struct BoolIndex {
    pub targets: Vec<BoolTarget>,
    node_slot: HashMap<NodeId, usize>,
    hole_slot: Vec<usize>,
}

impl BoolIndex {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn slot_of_node(&self, n: NodeId) -> Option<usize> {
        self.node_slot.get(&n).copied()
    }

    pub fn slot_of_hole(&self, y: YId) -> usize {
        self.hole_slot[y.index()]
    }
}

/// The interface mapping `I`: one of {0, 1, ⊥} (`Some(false)`,
/// `Some(true)`, `None`) per slot of a [`BoolIndex`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterfaceMap {
    slots: Vec<Option<bool>>,
}

impl InterfaceMap {
    pub fn empty(len: usize) -> Self {
        InterfaceMap {
            slots: vec![None; len],
        }
    }

    pub fn from_slots(slots: Vec<Option<bool>>) -> Self {
        InterfaceMap { slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, slot: usize) -> Option<bool> {
        self.slots[slot]
    }

    pub fn set(&mut self, slot: usize, v: Option<bool>) {
        self.slots[slot] = v;
    }

    pub fn slots(&self) -> &[Option<bool>] {
        &self.slots
    }

    /// Number of entries different from ⊥.
    pub fn num_set(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Values for the unknowns, `σ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub reals: Vec<f64>,
    pub bools: Vec<bool>,
}

impl Assignment {
    pub fn new(reals: Vec<f64>, bools: Vec<bool>) -> Self {
        Assignment { reals, bools }
    }

    pub fn real(&self, x: XId) -> f64 {
        self.reals[x.index()]
    }

    pub fn bool(&self, y: YId) -> bool {
        self.bools[y.index()]
    }

    pub fn is_total_for(&self, p: &Program) -> bool {
        self.reals.len() == p.real_unknowns().len() && self.bools.len() == p.bool_unknowns().len()
    }
}

/// Hash-consing builder for [`Program`]s.
///
/// Structurally identical subexpressions are interned once, so generators can
/// freely rebuild shared state expressions.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    nodes: Vec<Node>,
    intern: HashMap<Node, NodeId>,
    asserts: Vec<NodeId>,
    bound_assert: Vec<bool>,
    reals: Vec<RealDecl>,
    bools: Vec<BoolDecl>,
    fold: bool,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// A builder that evaluates operations on constants and selects the
    /// branch of conditionals whose condition is a comparison of a constant.
    /// Useful for generators whose initial state is concrete.
    pub fn folding() -> Self {
        ProgramBuilder {
            fold: true,
            ..Self::default()
        }
    }

    /// The constant value of `e`, if it is a constant node.
    pub fn const_value(&self, e: Real) -> Option<f64> {
        match self.nodes[e.0.index()] {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// The value of `b` if it is a comparison of a constant.
    fn const_truth(&self, b: Bool) -> Option<bool> {
        match self.nodes[b.0.index()] {
            Node::Ge(e) => self.const_value(Real(e)).map(|c| c >= 0.0),
            _ => None,
        }
    }

    fn mk(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.intern.get(&node) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.intern.insert(node, id);
        id
    }

    /// Declares a real unknown and returns its expression. Bounds become
    /// asserts `x - lo >= 0` and `hi - x >= 0`.
    pub fn real_unknown(&mut self, name: &str, bounds: Option<(f64, f64)>) -> Real {
        let x = XId(self.reals.len() as u32);
        self.reals.push(RealDecl {
            name: name.to_string(),
            bounds,
        });
        let e = Real(self.mk(Node::Unknown(x)));
        if let Some((lo, hi)) = bounds {
            let lo_c = self.constant(lo);
            let hi_c = self.constant(hi);
            let a = self.sub(e, lo_c);
            let b = self.sub(hi_c, e);
            let ga = self.ge0(a);
            let gb = self.ge0(b);
            self.push_assert(ga, true);
            self.push_assert(gb, true);
        }
        e
    }

    pub fn bool_unknown(&mut self, name: &str) -> YId {
        let y = YId(self.bools.len() as u32);
        self.bools.push(BoolDecl {
            name: name.to_string(),
        });
        y
    }

    pub fn real_ref(&mut self, x: XId) -> Real {
        Real(self.mk(Node::Unknown(x)))
    }

    pub fn constant(&mut self, c: f64) -> Real {
        assert!(c.is_finite(), "non-finite constant {c}");
        let c = if c == 0.0 { 0.0 } else { c };
        Real(self.mk(Node::Const(c)))
    }

    pub fn op(&mut self, kind: OpKind, args: &[Real]) -> Real {
        assert_eq!(kind.arity(), args.len(), "arity mismatch for {kind:?}");
        if self.fold {
            let vals: Option<Vec<f64>> = args.iter().map(|a| self.const_value(*a)).collect();
            if let Some(v) = vals.and_then(|v| kind.eval_exact(&v)) {
                if v.is_finite() {
                    return self.constant(v);
                }
            }
        }
        Real(self.mk(Node::Op(kind, args.iter().map(|a| a.0).collect())))
    }

    pub fn add(&mut self, a: Real, b: Real) -> Real {
        self.op(OpKind::Add, &[a, b])
    }

    pub fn sub(&mut self, a: Real, b: Real) -> Real {
        self.op(OpKind::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: Real, b: Real) -> Real {
        self.op(OpKind::Mul, &[a, b])
    }

    pub fn div(&mut self, a: Real, b: Real) -> Real {
        self.op(OpKind::Div, &[a, b])
    }

    pub fn neg(&mut self, a: Real) -> Real {
        self.op(OpKind::Neg, &[a])
    }

    pub fn sin(&mut self, a: Real) -> Real {
        self.op(OpKind::Sin, &[a])
    }

    pub fn cos(&mut self, a: Real) -> Real {
        self.op(OpKind::Cos, &[a])
    }

    pub fn sqrt(&mut self, a: Real) -> Real {
        self.op(OpKind::Sqrt, &[a])
    }

    pub fn add_const(&mut self, a: Real, c: f64) -> Real {
        let c = self.constant(c);
        self.add(a, c)
    }

    pub fn mul_const(&mut self, a: Real, c: f64) -> Real {
        let c = self.constant(c);
        self.mul(a, c)
    }

    pub fn ite(&mut self, cond: Bool, then: Real, els: Real) -> Real {
        if self.fold {
            match self.const_truth(cond) {
                Some(true) => return then,
                Some(false) => return els,
                None if then == els => return then,
                None => {}
            }
        }
        Real(self.mk(Node::IteB {
            cond: cond.0,
            then: then.0,
            els: els.0,
        }))
    }

    pub fn iteh(&mut self, cond: YId, then: Real, els: Real) -> Real {
        assert!(cond.index() < self.bools.len(), "undeclared Boolean unknown");
        Real(self.mk(Node::IteH {
            cond,
            then: then.0,
            els: els.0,
        }))
    }

    /// `e >= 0`
    pub fn ge0(&mut self, e: Real) -> Bool {
        Bool(self.mk(Node::Ge(e.0)))
    }

    /// `a >= b`, encoded as `a - b >= 0`.
    pub fn ge(&mut self, a: Real, b: Real) -> Bool {
        let d = self.sub(a, b);
        self.ge0(d)
    }

    /// `a <= b`, encoded as `b - a >= 0`.
    pub fn le(&mut self, a: Real, b: Real) -> Bool {
        self.ge(b, a)
    }

    /// `a > b`, encoded as `not(b - a >= 0)`.
    pub fn gt(&mut self, a: Real, b: Real) -> Bool {
        let le = self.le(a, b);
        self.not(le)
    }

    /// `a < b`, encoded as `not(a - b >= 0)`.
    pub fn lt(&mut self, a: Real, b: Real) -> Bool {
        let ge = self.ge(a, b);
        self.not(ge)
    }

    pub fn and(&mut self, a: Bool, b: Bool) -> Bool {
        Bool(self.mk(Node::And(a.0, b.0)))
    }

    pub fn not(&mut self, b: Bool) -> Bool {
        Bool(self.mk(Node::Not(b.0)))
    }

    /// `a or b`, encoded as `not(not a and not b)`.
    pub fn or(&mut self, a: Bool, b: Bool) -> Bool {
        let na = self.not(a);
        let nb = self.not(b);
        let both = self.and(na, nb);
        self.not(both)
    }

    pub fn assert(&mut self, b: Bool) {
        self.push_assert(b, false);
    }

    fn push_assert(&mut self, b: Bool, from_bound: bool) {
        self.asserts.push(b.0);
        self.bound_assert.push(from_bound);
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn num_bools(&self) -> usize {
        self.bools.len()
    }

    pub fn finish(self) -> Program {
        Program {
            nodes: self.nodes,
            asserts: self.asserts,
            bound_assert: self.bound_assert,
            reals: self.reals,
            bools: self.bools,
        }
    }
}

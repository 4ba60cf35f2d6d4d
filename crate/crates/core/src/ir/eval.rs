//! Exact (unsmoothed) semantics of the core language.

use thiserror::Error;

use super::{Assignment, Node, NodeId, OpKind, Program};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in {op:?} at node {node}")]
    Domain { node: u32, op: OpKind },
    #[error("non-finite value at node {node}")]
    NonFinite { node: u32 },
    #[error("assignment does not cover the program's unknowns")]
    Partial,
    #[error("node {node} has the wrong sort for this evaluation")]
    Sort { node: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Real(f64),
    Bool(bool),
}

/// Memoizing evaluator over one assignment. Only the branch selected by an
/// `ite` condition is evaluated, so guarded operations in dead branches never
/// raise domain errors.
#[derive(Debug)]
pub struct Evaluator<'a> {
    program: &'a Program,
    sigma: &'a Assignment,
    memo: Vec<Option<Value>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(program: &'a Program, sigma: &'a Assignment) -> Result<Self, EvalError> {
        if !sigma.is_total_for(program) {
            return Err(EvalError::Partial);
        }
        Ok(Evaluator {
            program,
            sigma,
            memo: vec![None; program.len()],
        })
    }

    pub fn real(&mut self, n: NodeId) -> Result<f64, EvalError> {
        match self.value(n)? {
            Value::Real(v) => Ok(v),
            Value::Bool(_) => Err(EvalError::Sort { node: n.0 }),
        }
    }

    pub fn boolean(&mut self, n: NodeId) -> Result<bool, EvalError> {
        match self.value(n)? {
            Value::Bool(v) => Ok(v),
            Value::Real(_) => Err(EvalError::Sort { node: n.0 }),
        }
    }

    fn value(&mut self, root: NodeId) -> Result<Value, EvalError> {
        // Explicit stack: unrolled simulations produce deep DAGs.
        let mut stack = vec![root];
        while let Some(&n) = stack.last() {
            if self.memo[n.index()].is_some() {
                stack.pop();
                continue;
            }
            match self.step(n)? {
                Some(v) => {
                    self.memo[n.index()] = Some(v);
                    stack.pop();
                }
                None => {
                    let missing = self.missing_child(n);
                    stack.push(missing);
                }
            }
        }
        Ok(self.memo[root.index()].expect("evaluated"))
    }

    fn get(&self, n: NodeId) -> Option<Value> {
        self.memo[n.index()]
    }

    fn get_real(&self, n: NodeId) -> Option<f64> {
        match self.get(n) {
            Some(Value::Real(v)) => Some(v),
            _ => None,
        }
    }

    fn get_bool(&self, n: NodeId) -> Option<bool> {
        match self.get(n) {
            Some(Value::Bool(v)) => Some(v),
            _ => None,
        }
    }

    /// The first child needed by `n` that has not been evaluated yet.
    fn missing_child(&self, n: NodeId) -> NodeId {
        match self.program.node(n) {
            Node::IteB { cond, then, els } => match self.get_bool(*cond) {
                None => *cond,
                Some(true) => *then,
                Some(false) => *els,
            },
            Node::IteH { cond, then, els } => {
                if self.sigma.bool(*cond) {
                    *then
                } else {
                    *els
                }
            }
            other => other
                .children()
                .into_iter()
                .find(|c| self.get(*c).is_none())
                .expect("some child is missing"),
        }
    }

    /// Computes `n` if all the children it needs are available.
    fn step(&self, n: NodeId) -> Result<Option<Value>, EvalError> {
        let node = self.program.node(n);
        let v = match node {
            Node::Unknown(x) => Value::Real(self.sigma.real(*x)),
            Node::Const(c) => Value::Real(*c),
            Node::Op(kind, args) => {
                let mut vals = [0.0; 2];
                for (i, a) in args.iter().enumerate() {
                    match self.get(*a) {
                        Some(Value::Real(v)) => vals[i] = v,
                        Some(Value::Bool(_)) => return Err(EvalError::Sort { node: a.0 }),
                        None => return Ok(None),
                    }
                }
                let r = kind
                    .eval_exact(&vals[..args.len()])
                    .ok_or(EvalError::Domain { node: n.0, op: *kind })?;
                if !r.is_finite() {
                    return Err(EvalError::NonFinite { node: n.0 });
                }
                Value::Real(r)
            }
            Node::IteB { cond, then, els } => {
                let Some(c) = self.get_bool(*cond) else {
                    return Ok(None);
                };
                let branch = if c { *then } else { *els };
                match self.get_real(branch) {
                    Some(v) => Value::Real(v),
                    None => return Ok(None),
                }
            }
            Node::IteH { cond, then, els } => {
                let branch = if self.sigma.bool(*cond) { *then } else { *els };
                match self.get_real(branch) {
                    Some(v) => Value::Real(v),
                    None => return Ok(None),
                }
            }
            Node::Ge(e) => match self.get_real(*e) {
                Some(v) => Value::Bool(v >= 0.0),
                None => return Ok(None),
            },
            Node::And(a, b) => match (self.get_bool(*a), self.get_bool(*b)) {
                (Some(x), Some(y)) => Value::Bool(x && y),
                _ => return Ok(None),
            },
            Node::Not(b) => match self.get_bool(*b) {
                Some(x) => Value::Bool(!x),
                None => return Ok(None),
            },
        };
        Ok(Some(v))
    }
}

/// `⟦n⟧σ` for a real expression.
pub fn eval_real(p: &Program, n: NodeId, sigma: &Assignment) -> Result<f64, EvalError> {
    Evaluator::new(p, sigma)?.real(n)
}

/// `⟦n⟧σ` for a Boolean expression.
pub fn eval_bool(p: &Program, n: NodeId, sigma: &Assignment) -> Result<bool, EvalError> {
    Evaluator::new(p, sigma)?.boolean(n)
}

/// `ψ(σ)`: every assert evaluates to true under the exact semantics.
pub fn verify(p: &Program, sigma: &Assignment) -> Result<bool, EvalError> {
    let mut ev = Evaluator::new(p, sigma)?;
    for &a in p.asserts() {
        if !ev.boolean(a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, ProgramBuilder};

    fn sigma(reals: &[f64]) -> Assignment {
        Assignment::new(reals.to_vec(), vec![])
    }

    #[test]
    fn ite_takes_then_branch() {
        let p = parse_program("(real x) (assert (>= (ite (>= x 0) 1 2) 0))").unwrap();
        let Node::Ge(ite) = p.node(p.asserts()[0]) else { panic!() };
        assert_eq!(eval_real(&p, *ite, &sigma(&[3.0])).unwrap(), 1.0);
        assert_eq!(eval_real(&p, *ite, &sigma(&[-3.0])).unwrap(), 2.0);
        // Ge is inclusive.
        assert_eq!(eval_real(&p, *ite, &sigma(&[0.0])).unwrap(), 1.0);
    }

    #[test]
    fn boolean_connectives() {
        let mut b = ProgramBuilder::new();
        let x = b.real_unknown("x", None);
        let zero = b.constant(0.0);
        let m1 = b.constant(-1.0);
        let one = b.constant(1.0);
        let g0 = b.ge0(zero);
        let gm = b.ge0(m1);
        let g1 = b.ge0(one);
        let conj = b.and(gm, g1);
        let gx = b.ge0(x);
        let nx = b.not(gx);
        let p = b.finish();
        let s = sigma(&[-2.0]);
        assert!(eval_bool(&p, g0.0, &s).unwrap());
        assert!(!eval_bool(&p, conj.0, &s).unwrap());
        assert!(eval_bool(&p, nx.0, &s).unwrap());
    }

    #[test]
    fn domain_errors() {
        let p = parse_program("(real x) (assert (>= (sqrt x) 0)) (assert (>= (/ 1 x) 0))").unwrap();
        let Node::Ge(s) = p.node(p.asserts()[0]) else { panic!() };
        let Node::Ge(d) = p.node(p.asserts()[1]) else { panic!() };
        assert!(matches!(
            eval_real(&p, *s, &sigma(&[-1.0])),
            Err(EvalError::Domain { op: OpKind::Sqrt, .. })
        ));
        assert!(matches!(
            eval_real(&p, *d, &sigma(&[0.0])),
            Err(EvalError::Domain { op: OpKind::Div, .. })
        ));
        assert_eq!(eval_real(&p, *d, &sigma(&[4.0])).unwrap(), 0.25);
    }

    #[test]
    fn dead_branch_is_not_evaluated() {
        let p = parse_program("(real x) (assert (>= (ite (>= x 0) (sqrt x) 1) 0))").unwrap();
        assert!(verify(&p, &sigma(&[-4.0])).unwrap());
    }

    #[test]
    fn iteh_selects_by_hole() {
        let p = parse_program("(real x) (bool y) (assert (>= (iteh y x (- x)) 0))").unwrap();
        let s = Assignment::new(vec![2.0], vec![true]);
        assert!(verify(&p, &s).unwrap());
        let s = Assignment::new(vec![2.0], vec![false]);
        assert!(!verify(&p, &s).unwrap());
    }

    #[test]
    fn partial_assignment_rejected() {
        let p = parse_program("(real x) (assert (>= x 0))").unwrap();
        assert_eq!(verify(&p, &sigma(&[])), Err(EvalError::Partial));
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let mut b = ProgramBuilder::new();
        let x = b.real_unknown("x", None);
        let mut acc = x;
        for i in 0..200_000 {
            let c = b.constant(1.0 + i as f64 * 1e-9);
            acc = b.add(acc, c);
        }
        let g = b.ge0(acc);
        b.assert(g);
        let p = b.finish();
        assert!(verify(&p, &sigma(&[0.0])).unwrap());
    }
}

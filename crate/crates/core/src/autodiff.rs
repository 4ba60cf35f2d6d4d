//! Forward-mode differentiation of smoothed constraint sets.
//!
//! One topological pass over the arena computes every node's value together
//! with its dense gradient with respect to all variables.

use thiserror::Error;

use crate::smooth::{smooth_transition, SId, SmoothNode, SmoothedConstraintSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdError {
    #[error("non-finite value at smoothed node {0:?}")]
    NonFiniteValue(SId),
    #[error("non-finite derivative at smoothed node {0:?}")]
    NonFiniteGradient(SId),
}

/// Value and gradient of one expression.
#[derive(Debug, Clone, PartialEq)]
pub struct GradVector {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Values and gradients of every constraint of a set at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub num_vars: usize,
    pub values: Vec<f64>,
    /// Row-major, one row of `num_vars` entries per constraint.
    pub grads: Vec<f64>,
    /// Number of arena nodes evaluated.
    pub node_evals: usize,
}

impl Evaluation {
    pub fn grad(&self, constraint: usize) -> &[f64] {
        &self.grads[constraint * self.num_vars..(constraint + 1) * self.num_vars]
    }
}

/// Evaluates every arena node with its gradient.
pub fn evaluate(s: &SmoothedConstraintSet, x: &[f64]) -> Result<Evaluation, AdError> {
    let n = s.num_vars();
    assert_eq!(x.len(), n, "assignment length");
    let nodes = s.arena.nodes();
    let mut val = vec![0.0; nodes.len()];
    let mut grad = vec![0.0; nodes.len() * n];
    for (i, node) in nodes.iter().enumerate() {
        let (done, rest) = grad.split_at_mut(i * n);
        let g = &mut rest[..n];
        let v = match *node {
            SmoothNode::Var(k) => {
                g[k as usize] = 1.0;
                x[k as usize]
            }
            SmoothNode::Const(c) => c,
            SmoothNode::Op(kind, [a, b]) => {
                let args = [val[a.index()], val[b.index()]];
                let v = kind.eval_smooth(&args);
                let [da, db] = kind.partials(&args, v);
                let ga = &done[a.index() * n..(a.index() + 1) * n];
                if kind.arity() == 1 {
                    for (gi, &gai) in g.iter_mut().zip(ga) {
                        *gi = da * gai;
                    }
                } else {
                    let gb = &done[b.index() * n..(b.index() + 1) * n];
                    for ((gi, &gai), &gbi) in g.iter_mut().zip(ga).zip(gb) {
                        *gi = da * gai + db * gbi;
                    }
                }
                v
            }
            SmoothNode::Sigmoid { arg, beta } => {
                let v = smooth_transition(val[arg.index()], beta);
                let d = beta * v * (1.0 - v);
                let ga = &done[arg.index() * n..(arg.index() + 1) * n];
                for (gi, &gai) in g.iter_mut().zip(ga) {
                    *gi = d * gai;
                }
                v
            }
        };
        let id = SId(i as u32);
        if !v.is_finite() {
            return Err(AdError::NonFiniteValue(id));
        }
        if g.iter().any(|d| !d.is_finite()) {
            return Err(AdError::NonFiniteGradient(id));
        }
        val[i] = v;
    }
    let mut values = Vec::with_capacity(s.constraints.len());
    let mut grads = Vec::with_capacity(s.constraints.len() * n);
    for c in &s.constraints {
        let k = c.node.index();
        values.push(val[k]);
        grads.extend_from_slice(&grad[k * n..(k + 1) * n]);
    }
    Ok(Evaluation {
        num_vars: n,
        values,
        grads,
        node_evals: nodes.len(),
    })
}

/// One [`GradVector`] per constraint.
pub fn eval_with_grad(s: &SmoothedConstraintSet, x: &[f64]) -> Result<Vec<GradVector>, AdError> {
    let e = evaluate(s, x)?;
    Ok((0..e.values.len())
        .map(|i| GradVector {
            value: e.values[i],
            grad: e.grad(i).to_vec(),
        })
        .collect())
}

/// Value and gradient of a single arena node.
pub fn node_with_grad(s: &SmoothedConstraintSet, node: SId, x: &[f64]) -> Result<GradVector, AdError> {
    let mut one = s.clone();
    one.constraints = vec![crate::smooth::Constraint {
        node,
        origin: crate::smooth::Origin::Assert(0),
    }];
    Ok(eval_with_grad(&one, x)?.remove(0))
}

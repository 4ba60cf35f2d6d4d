//! Boolean abstraction: every Boolean expression and Boolean unknown becomes a
//! propositional variable, `Ge` atoms are left unconstrained, and `And`/`Not`
//! nodes are tied to their children by Tseitin biconditionals.

use crate::ir::{BoolIndex, BoolTarget, InterfaceMap, Node, Program, YId};
use crate::sat::{CnfProblem, Lit, Var};

/// Which variables the SAT solver reports back through the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfaceScope {
    /// Every Boolean expression and Boolean unknown.
    #[default]
    All,
    /// Only `Ge` atoms and Boolean unknowns.
    AtomsAndHoles,
}

/// Mapping between program Boolean nodes and SAT variables. Variable `i`
/// corresponds to slot `i` of the program's [`BoolIndex`].
#[derive(Debug, Clone)]
pub struct BoolSkeleton {
    pub index: BoolIndex,
    pub interface: Vec<bool>,
}

impl BoolSkeleton {
    pub fn num_vars(&self) -> usize {
        self.index.len()
    }

    pub fn var_of_slot(&self, slot: usize) -> Var {
        Var(slot as u32)
    }

    pub fn var_of_hole(&self, y: YId) -> Var {
        self.var_of_slot(self.index.slot_of_hole(y))
    }

    /// Turns a (partial) SAT assignment into an interface mapping. Variables
    /// outside the interface scope stay ⊥.
    pub fn decode_model(&self, model: &[Option<bool>]) -> InterfaceMap {
        let slots = (0..self.num_vars())
            .map(|i| {
                if self.interface[i] {
                    model.get(i).copied().flatten()
                } else {
                    None
                }
            })
            .collect();
        InterfaceMap::from_slots(slots)
    }

    /// Values of the Boolean unknowns fixed by the assignment.
    pub fn decode_holes(&self, model: &[Option<bool>]) -> Vec<Option<bool>> {
        (0..self.index.len())
            .filter_map(|slot| match self.index.targets[slot] {
                BoolTarget::Hole(_) => Some(model.get(slot).copied().flatten()),
                BoolTarget::Node(_) => None,
            })
            .collect()
    }
}

/// Builds the CNF of the program's Boolean skeleton.
pub fn abstract_bool(p: &Program, scope: InterfaceScope) -> (CnfProblem, BoolSkeleton) {
    let index = p.collect_bool_nodes();
    let n = index.len();
    let mut cnf = CnfProblem::new(n);
    let var = |node| {
        Var(index
            .slot_of_node(node)
            .expect("Boolean child is reachable") as u32)
    };
    for (slot, t) in index.targets.iter().enumerate() {
        let v = Var(slot as u32);
        let BoolTarget::Node(id) = *t else {
            continue;
        };
        match *p.node(id) {
            Node::And(a, b) => {
                let (a, b) = (var(a), var(b));
                cnf.add_clause(&[v.lit(false), a.lit(true)]);
                cnf.add_clause(&[v.lit(false), b.lit(true)]);
                cnf.add_clause(&[v.lit(true), a.lit(false), b.lit(false)]);
            }
            Node::Not(a) => {
                let a = var(a);
                cnf.add_clause(&[v.lit(false), a.lit(false)]);
                cnf.add_clause(&[v.lit(true), a.lit(true)]);
            }
            _ => {}
        }
    }
    let mut asserted = vec![false; n];
    for &a in p.asserts() {
        let v = var(a);
        if !std::mem::replace(&mut asserted[v.index()], true) {
            cnf.add_clause(&[Lit::new(v, true)]);
        }
    }
    let interface: Vec<bool> = index
        .targets
        .iter()
        .map(|t| match (scope, t) {
            (InterfaceScope::All, _) | (_, BoolTarget::Hole(_)) => true,
            (InterfaceScope::AtomsAndHoles, BoolTarget::Node(id)) => {
                matches!(p.node(*id), Node::Ge(_))
            }
        })
        .collect();
    cnf.interface = interface.clone();
    (cnf, BoolSkeleton { index, interface })
}

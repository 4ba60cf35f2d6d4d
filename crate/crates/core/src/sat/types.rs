use std::fmt;
use std::ops::Not;

/// Propositional variable, 0-based. DIMACS numbering is `index + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }

    pub fn dimacs(self) -> i64 {
        self.0 as i64 + 1
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn new(v: Var, positive: bool) -> Lit {
        Lit(v.0 << 1 | (!positive) as u32)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn from_dimacs(d: i64) -> Lit {
        assert!(d != 0);
        Lit::new(Var((d.unsigned_abs() - 1) as u32), d > 0)
    }

    pub fn dimacs(self) -> i64 {
        if self.is_positive() {
            self.var().dimacs()
        } else {
            -self.var().dimacs()
        }
    }
}

impl Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dimacs())
    }
}

/// A CNF clause database plus the set of interface variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CnfProblem {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
    /// `interface[v]` is true when assigning `v` must be reported back.
    pub interface: Vec<bool>,
}

impl CnfProblem {
    pub fn new(num_vars: usize) -> Self {
        CnfProblem {
            num_vars,
            clauses: Vec::new(),
            interface: vec![false; num_vars],
        }
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.clauses.push(lits.to_vec());
    }

    /// Whether a total assignment satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| model[l.var().index()] == l.is_positive())
        })
    }
}

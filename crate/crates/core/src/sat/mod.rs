//! A small self-contained satisfiability engine: clause-form formulas, a
//! conflict-driven search with two-watched-literal unit propagation, and a
//! sequential-counter cardinality encoding.

mod cardinality;
mod solver;

use std::fmt::{self, Write as _};
use std::ops::Not;
use std::time::Duration;

pub use cardinality::at_most_k;
pub use solver::Solver;

/// A literal: variable index plus polarity, packed as `2 * var + negated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit(((var as u32) << 1) | u32::from(!positive))
    }

    pub fn pos(var: usize) -> Lit {
        Lit::new(var, true)
    }

    pub fn neg(var: usize) -> Lit {
        Lit::new(var, false)
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    /// DIMACS integer form (1-based, sign for polarity).
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A formula in clause form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(num_vars: usize) -> Self {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn new_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn add_clause(&mut self, clause: impl IntoIterator<Item = Lit>) {
        let clause: Vec<Lit> = clause.into_iter().collect();
        for lit in &clause {
            if lit.var() >= self.num_vars {
                self.num_vars = lit.var() + 1;
            }
        }
        self.clauses.push(clause);
    }

    /// Whether `model` (indexed by variable) satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| model[l.var()] == l.is_positive()))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                write!(out, "{} ", lit).unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Limits on a single search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_conflicts: u64,
    pub max_time: Duration,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_conflicts: 10_000_000,
            max_time: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    /// A model indexed by variable.
    Sat(Vec<bool>),
    Unsat,
    /// The budget ran out before a verdict.
    Unknown { conflicts: u64 },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_packing() {
        let l = Lit::pos(5);
        assert_eq!(l.var(), 5);
        assert!(l.is_positive());
        assert!(!(!l).is_positive());
        assert_eq!((!l).var(), 5);
        assert_eq!(l.to_dimacs(), 6);
        assert_eq!((!l).to_dimacs(), -6);
    }

    #[test]
    fn dimacs_text() {
        let mut cnf = Cnf::new();
        cnf.add_clause([Lit::pos(0), Lit::neg(1)]);
        cnf.add_clause([Lit::pos(1)]);
        assert_eq!(cnf.to_dimacs(), "p cnf 2 2\n1 -2 0\n2 0\n");
    }
}

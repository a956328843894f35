//! Random well-formed formulas, used for distractor hypotheses and testing.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{BinaryPred, Formula, UnaryPred, Var};

/// Bounds on randomly grown formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormulaShape {
    /// Maximum quantifier nesting.
    pub max_qd: usize,
    /// Maximum connective/quantifier nesting (atoms are depth 0).
    pub max_depth: usize,
    /// Whether `(= u v)` atoms may appear.
    pub equality: bool,
}

impl Default for FormulaShape {
    fn default() -> Self {
        FormulaShape {
            max_qd: 2,
            max_depth: 4,
            equality: false,
        }
    }
}

fn random_atom(rng: &mut impl Rng, scope: &[Var], equality: bool) -> Formula {
    let v = |rng: &mut _| *scope.choose(rng).expect("scope contains x");
    let roll = rng.gen_range(0..if equality { 9 } else { 8 });
    match roll {
        0..=3 => Formula::Unary(UnaryPred::ALL[roll % 2], v(rng)),
        4..=7 => {
            let (a, b) = (v(rng), v(rng));
            Formula::Binary(BinaryPred::ALL[roll % 2], a, b)
        }
        _ => {
            let (a, b) = (v(rng), v(rng));
            Formula::Eq(a, b)
        }
    }
}

fn grow(rng: &mut impl Rng, scope: &mut Vec<Var>, qd: usize, depth: usize, shape: &FormulaShape) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return random_atom(rng, scope, shape.equality);
    }
    let binder = Var::BINDERS.iter().copied().find(|v| !scope.contains(v));
    let can_quantify = qd > 0 && binder.is_some();
    match rng.gen_range(0..if can_quantify { 5 } else { 3 }) {
        0 => Formula::not(grow(rng, scope, qd, depth - 1, shape)),
        1 | 2 => {
            let n = rng.gen_range(2..=3);
            let children = (0..n).map(|_| grow(rng, scope, qd, depth - 1, shape)).collect();
            if rng.gen_bool(0.5) {
                Formula::and(children)
            } else {
                Formula::or(children)
            }
        }
        _ => {
            let v = binder.expect("checked above");
            scope.push(v);
            let body = grow(rng, scope, qd - 1, depth - 1, shape);
            scope.pop();
            if rng.gen_bool(0.5) {
                Formula::forall(v, body)
            } else {
                Formula::exists(v, body)
            }
        }
    }
}

/// A random formula with free variables within `{x}`, no shadowing, and
/// nesting bounded by `shape`. It may fail to mention `x`.
pub fn random_open_formula(rng: &mut impl Rng, shape: &FormulaShape) -> Formula {
    grow(rng, &mut vec![Var::X], shape.max_qd, shape.max_depth, shape)
}

/// A random solution-shaped formula (free variables exactly `{x}`).
pub fn random_formula(rng: &mut impl Rng, shape: &FormulaShape) -> Formula {
    loop {
        let f = random_open_formula(rng, shape);
        if f.has_solution_shape() {
            return f;
        }
    }
}

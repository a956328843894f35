//! Rejection filters that rule out shortcut solutions of a FullObs instance.

use crate::fol::{BinaryPred, Formula, UnaryPred, Var};
use crate::semantics::{evaluate, matches};
use crate::world::World;

/// `(P x)`, `(Q x)`, `(R x x)`, `(S x x)` and their negations.
pub fn atomic_literals() -> Vec<Formula> {
    let atoms = [
        Formula::Unary(UnaryPred::P, Var::X),
        Formula::Unary(UnaryPred::Q, Var::X),
        Formula::Binary(BinaryPred::R, Var::X, Var::X),
        Formula::Binary(BinaryPred::S, Var::X, Var::X),
    ];
    let mut out = atoms.to_vec();
    out.extend(atoms.iter().cloned().map(Formula::not));
    out
}

fn matches_all(f: &Formula, worlds: &[World]) -> bool {
    worlds.iter().all(|w| matches(f, w))
}

/// The first atomic literal matching the target in every world, if any.
pub fn filter_atomic(worlds: &[World]) -> Option<Formula> {
    atomic_literals().into_iter().find(|f| matches_all(f, worlds))
}

/// The first proper subformula of `gold` whose free variables lie within
/// `{x}` and which matches every world, if any.
pub fn filter_subformula(gold: &Formula, worlds: &[World]) -> Option<Formula> {
    gold.proper_subformulas()
        .into_iter()
        .filter(|s| s.free_vars().iter().all(|v| *v == Var::X))
        .find(|s| matches_all(s, worlds))
}

/// The first conjunction or disjunction of two or three distinct atomic
/// literals that matches every world, if any.
pub fn filter_quantifier_free(worlds: &[World]) -> Option<Formula> {
    let lits = atomic_literals();
    // Per literal and world, the extension as a bitmask.
    let ext: Vec<Vec<u64>> = lits
        .iter()
        .map(|l| {
            worlds
                .iter()
                .map(|w| {
                    (0..w.size())
                        .filter(|&a| evaluate(l, w, a))
                        .fold(0u64, |m, a| m | 1 << a)
                })
                .collect()
        })
        .collect();
    let targets: Vec<u64> = worlds
        .iter()
        .map(|w| w.target_members().iter().fold(0u64, |m, &a| m | 1 << a))
        .collect();
    let n = lits.len();
    let mut combos: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            combos.push(vec![i, j]);
            for k in j + 1..n {
                combos.push(vec![i, j, k]);
            }
        }
    }
    combos.sort_by_key(Vec::len);
    for combo in combos {
        for conjunctive in [true, false] {
            let hit = (0..worlds.len()).all(|wi| {
                let full = if worlds[wi].size() == 64 { u64::MAX } else { (1u64 << worlds[wi].size()) - 1 };
                let value = combo.iter().fold(if conjunctive { full } else { 0 }, |acc, &li| {
                    if conjunctive {
                        acc & ext[li][wi]
                    } else {
                        acc | ext[li][wi]
                    }
                });
                value == targets[wi]
            });
            if hit {
                let children = combo.iter().map(|&i| lits[i].clone()).collect();
                return Some(if conjunctive {
                    Formula::and(children)
                } else {
                    Formula::or(children)
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse;

    fn world(size: usize, atoms: &[&str], target: &[usize]) -> World {
        let mut w = World::empty(size);
        for a in atoms {
            w.set_atom(a.parse().unwrap(), true);
        }
        let mut t = vec![false; size];
        for &i in target {
            t[i] = true;
        }
        w.set_target(t);
        w
    }

    #[test]
    fn atomic_shortcut() {
        let ws = [world(3, &["P(a0)"], &[0]), world(3, &["P(a1)", "P(a2)"], &[1, 2])];
        assert_eq!(filter_atomic(&ws), Some(parse("(P x)").unwrap()));
        let ws = [world(3, &["P(a0)"], &[1])];
        assert_eq!(filter_atomic(&ws), None);
    }

    #[test]
    fn subformula_shortcut() {
        let gold = parse("(and (P x) (exists y (R x y)))").unwrap();
        let ws = [world(3, &["P(a0)", "R(a1,a2)"], &[0])];
        assert_eq!(filter_subformula(&gold, &ws), Some(parse("(P x)").unwrap()));
    }

    #[test]
    fn closed_subformulas_are_tested() {
        let gold = parse("(or (P x) (exists y (Q y)))").unwrap();
        let ws = [world(2, &["Q(a1)"], &[0, 1])];
        let found = filter_subformula(&gold, &ws).expect("closed disjunct covers the target");
        assert_eq!(found.to_string(), "(exists y (Q y))");
    }

    #[test]
    fn quantifier_free_shortcut() {
        let ws = [world(4, &["P(a0)", "Q(a0)", "P(a1)", "Q(a2)"], &[0])];
        assert_eq!(
            filter_quantifier_free(&ws),
            Some(parse("(and (P x) (Q x))").unwrap())
        );
        let tautology = [world(2, &[], &[0, 1])];
        assert_eq!(
            filter_quantifier_free(&tautology),
            Some(parse("(or (P x) (not (P x)))").unwrap())
        );
        let ws = [world(3, &["R(a0,a1)"], &[0])];
        assert_eq!(filter_quantifier_free(&ws), None);
    }
}

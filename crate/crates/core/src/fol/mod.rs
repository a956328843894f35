//! The formula language: a fixed relational signature, the formula AST, its
//! canonical S-expression text form, and the syntactic measures used by
//! generation and scoring.

mod family;
mod parse;
mod random;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use family::Family;
pub use parse::{parse, parse_open, ParseError};
pub use random::{random_formula, random_open_formula, FormulaShape};

/// A variable name. `X` is the free variable of every solution formula; the
/// others may only appear bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
    Z,
    W,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::Y, Var::Z, Var::W];
    pub const BINDERS: [Var; 3] = [Var::Y, Var::Z, Var::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::W => "w",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            "w" => Some(Var::W),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnaryPred {
    P,
    Q,
}

impl UnaryPred {
    pub const ALL: [UnaryPred; 2] = [UnaryPred::P, UnaryPred::Q];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn swapped(self) -> Self {
        match self {
            UnaryPred::P => UnaryPred::Q,
            UnaryPred::Q => UnaryPred::P,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryPred::P => "P",
            UnaryPred::Q => "Q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryPred {
    R,
    S,
}

impl BinaryPred {
    pub const ALL: [BinaryPred; 2] = [BinaryPred::R, BinaryPred::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn swapped(self) -> Self {
        match self {
            BinaryPred::R => BinaryPred::S,
            BinaryPred::S => BinaryPred::R,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryPred::R => "R",
            BinaryPred::S => "S",
        }
    }
}

/// Formula AST. `And`/`Or` are n-ary (at least two children) and kept as
/// written; nothing is binarized or simplified.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Unary(UnaryPred, Var),
    Binary(BinaryPred, Var, Var),
    Eq(Var, Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Forall(Var, Box<Formula>),
    Exists(Var, Box<Formula>),
}

impl Formula {
    pub fn not(body: Formula) -> Self {
        Formula::Not(Box::new(body))
    }

    pub fn and(children: Vec<Formula>) -> Self {
        debug_assert!(children.len() >= 2);
        Formula::And(children)
    }

    pub fn or(children: Vec<Formula>) -> Self {
        debug_assert!(children.len() >= 2);
        Formula::Or(children)
    }

    pub fn forall(var: Var, body: Formula) -> Self {
        Formula::Forall(var, Box::new(body))
    }

    pub fn exists(var: Var, body: Formula) -> Self {
        Formula::Exists(var, Box::new(body))
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::Unary(..) | Formula::Binary(..) | Formula::Eq(..)
        )
    }

    pub fn is_quantifier(&self) -> bool {
        matches!(self, Formula::Forall(..) | Formula::Exists(..))
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> &[Formula] {
        match self {
            Formula::Unary(..) | Formula::Binary(..) | Formula::Eq(..) => &[],
            Formula::Not(body) | Formula::Forall(_, body) | Formula::Exists(_, body) => {
                std::slice::from_ref(body.as_ref())
            }
            Formula::And(children) | Formula::Or(children) => children,
        }
    }

    /// Number of symbols in the canonical printed form: every head, predicate
    /// symbol, binder and variable occurrence counts one.
    pub fn ast_size(&self) -> usize {
        match self {
            Formula::Unary(..) => 2,
            Formula::Binary(..) | Formula::Eq(..) => 3,
            Formula::Not(body) => 1 + body.ast_size(),
            Formula::And(children) | Formula::Or(children) => {
                1 + children.iter().map(Formula::ast_size).sum::<usize>()
            }
            Formula::Forall(_, body) | Formula::Exists(_, body) => 2 + body.ast_size(),
        }
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Forall(_, body) | Formula::Exists(_, body) => 1 + body.quantifier_depth(),
            _ => self
                .children()
                .iter()
                .map(Formula::quantifier_depth)
                .max()
                .unwrap_or(0),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        let mut note = |v: Var| {
            if !bound.contains(&v) {
                out.insert(v);
            }
        };
        match self {
            Formula::Unary(_, v) => note(*v),
            Formula::Binary(_, a, b) | Formula::Eq(a, b) => {
                note(*a);
                note(*b);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                bound.push(*v);
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// True iff the free variables are exactly `{x}`.
    pub fn has_solution_shape(&self) -> bool {
        let free = self.free_vars();
        free.len() == 1 && free.contains(&Var::X)
    }

    /// Checks the constraints every solution formula must meet: free
    /// variables exactly `{x}` and no quantifier rebinding an in-scope name.
    pub fn validate(&self) -> Result<(), ParseError> {
        parse::check_binders(self, &mut vec![Var::X])?;
        parse::check_free(self)
    }

    pub fn uses_equality(&self) -> bool {
        matches!(self, Formula::Eq(..)) || self.children().iter().any(Formula::uses_equality)
    }

    /// All strict subtrees in pre-order (an atom is one node).
    pub fn proper_subformulas(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        for c in self.children() {
            c.push_subtrees(&mut out);
        }
        out
    }

    fn push_subtrees(&self, out: &mut Vec<Formula>) {
        out.push(self.clone());
        for c in self.children() {
            c.push_subtrees(out);
        }
    }

    /// Number of formula nodes (atoms count one).
    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(Formula::node_count).sum::<usize>()
    }

    pub fn classify_family(&self) -> Family {
        family::classify(self)
    }

    /// True iff some binary atom mentioning `x` sits under a universal.
    pub fn is_lift_hard(&self) -> bool {
        fn walk(f: &Formula, under_forall: bool) -> bool {
            match f {
                Formula::Binary(_, a, b) => under_forall && (*a == Var::X || *b == Var::X),
                Formula::Forall(_, body) => walk(body, true),
                _ => f.children().iter().any(|c| walk(c, under_forall)),
            }
        }
        walk(self, false)
    }

    /// Copy with predicate symbols renamed by `unary` and `binary`.
    pub fn rename(
        &self,
        unary: &impl Fn(UnaryPred) -> UnaryPred,
        binary: &impl Fn(BinaryPred) -> BinaryPred,
    ) -> Formula {
        self.map_atoms(&|f| match f {
            Formula::Unary(p, v) => Formula::Unary(unary(*p), *v),
            Formula::Binary(p, a, b) => Formula::Binary(binary(*p), *a, *b),
            other => other.clone(),
        })
    }

    /// Copy with the arguments of every binary atom exchanged.
    pub fn converse(&self) -> Formula {
        self.map_atoms(&|f| match f {
            Formula::Binary(p, a, b) => Formula::Binary(*p, *b, *a),
            other => other.clone(),
        })
    }

    fn map_atoms(&self, g: &impl Fn(&Formula) -> Formula) -> Formula {
        match self {
            Formula::Unary(..) | Formula::Binary(..) | Formula::Eq(..) => g(self),
            Formula::Not(body) => Formula::not(body.map_atoms(g)),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_atoms(g)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.map_atoms(g)).collect()),
            Formula::Forall(v, body) => Formula::forall(*v, body.map_atoms(g)),
            Formula::Exists(v, body) => Formula::exists(*v, body.map_atoms(g)),
        }
    }

    /// Copy with immediate child `i` replaced. Panics if there is no such child.
    pub fn with_child(&self, i: usize, child: Formula) -> Formula {
        let mut out = self.clone();
        match &mut out {
            Formula::Not(body) | Formula::Forall(_, body) | Formula::Exists(_, body) => {
                assert_eq!(i, 0, "single-child node");
                **body = child;
            }
            Formula::And(cs) | Formula::Or(cs) => cs[i] = child,
            _ => panic!("atoms have no children"),
        }
        out
    }

    /// Every formula obtained by replacing exactly one node with one of the
    /// alternatives `rewrite` offers for it, in pre-order.
    pub fn single_rewrites(&self, rewrite: &impl Fn(&Formula) -> Vec<Formula>) -> Vec<Formula> {
        let mut out = rewrite(self);
        for (i, c) in self.children().iter().enumerate() {
            for v in c.single_rewrites(rewrite) {
                out.push(self.with_child(i, v));
            }
        }
        out
    }

    /// Visits every node, parents before children.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Unary(p, v) => write!(f, "({} {})", p.name(), v),
            Formula::Binary(p, a, b) => write!(f, "({} {} {})", p.name(), a, b),
            Formula::Eq(a, b) => write!(f, "(= {} {})", a, b),
            Formula::Not(body) => write!(f, "(not {})", body),
            Formula::And(children) | Formula::Or(children) => {
                f.write_str(if matches!(self, Formula::And(_)) {
                    "(and"
                } else {
                    "(or"
                })?;
                for c in children {
                    write!(f, " {}", c)?;
                }
                f.write_str(")")
            }
            Formula::Forall(v, body) => write!(f, "(forall {} {})", v, body),
            Formula::Exists(v, body) => write!(f, "(exists {} {})", v, body),
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_open(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(text: &str) -> Formula {
        parse(text).unwrap()
    }

    #[test]
    fn ast_size_anchor_values() {
        let cases = [
            (
                "(and (and (not (P x)) (not (Q x))) (exists y (and (R x y) (and (P y) (not (Q y))))))",
                20,
            ),
            ("(and (not (or (P x) (Q x))) (exists y (S x y)))", 12),
            (
                "(and (not (P x)) (exists y (and (R x y) (and (P y) (not (Q y))))))",
                16,
            ),
            ("(and (not (P x)) (exists y (R x y)))", 9),
            (
                "(forall y (or (not (S x y)) (exists z (and (R y z) (Q z)))))",
                15,
            ),
        ];
        for (text, size) in cases {
            assert_eq!(f(text).ast_size(), size, "{text}");
        }
    }

    #[test]
    fn quantifier_depth_examples() {
        assert_eq!(f("(P x)").quantifier_depth(), 0);
        assert_eq!(f("(exists y (R x y))").quantifier_depth(), 1);
        assert_eq!(
            f("(exists y (forall z (or (not (R y z)) (S x z))))").quantifier_depth(),
            2
        );
        assert_eq!(
            f("(and (exists y (R x y)) (forall y (P y)))").quantifier_depth(),
            1
        );
    }

    #[test]
    fn lift_hard_examples() {
        assert!(f("(forall y (or (not (R x y)) (exists z (S y z))))").is_lift_hard());
        assert!(!f("(exists y (R x y))").is_lift_hard());
        assert!(!parse_open("(forall y (or (not (P y)) (Q y)))").unwrap().is_lift_hard());
        assert!(f("(exists y (forall z (or (not (R y z)) (S x z))))").is_lift_hard());
        // equality is not a binary predicate atom
        assert!(!f("(forall y (= x y))").is_lift_hard());
    }

    #[test]
    fn proper_subformulas_small() {
        assert_eq!(f("(not (P x))").proper_subformulas(), vec![f("(P x)")]);
        assert_eq!(
            f("(and (P x) (Q x))").proper_subformulas(),
            vec![f("(P x)"), f("(Q x)")]
        );
    }

    #[test]
    fn proper_subformulas_hand_count_on_qd2_template() {
        // (exists y (and (P y) (forall z (or (not (R y z)) (S x z)))))
        // subtrees below the root: and, (P y), forall, or, not, (R y z), (S x z)
        let g = f("(exists y (and (P y) (forall z (or (not (R y z)) (S x z)))))");
        let subs = g.proper_subformulas();
        assert_eq!(subs.len(), 7);
        assert_eq!(subs.len(), g.node_count() - 1);
        let texts: Vec<String> = subs.iter().map(|s| s.to_string()).collect();
        assert!(texts.contains(&"(P y)".to_string()));
        assert!(texts.contains(&"(not (R y z))".to_string()));
        assert_eq!(texts[0], "(and (P y) (forall z (or (not (R y z)) (S x z))))");
    }

    #[test]
    fn nary_printing() {
        let g = Formula::and(vec![
            Formula::Unary(UnaryPred::P, Var::X),
            Formula::Unary(UnaryPred::Q, Var::X),
            Formula::Binary(BinaryPred::R, Var::X, Var::X),
        ]);
        assert_eq!(g.to_string(), "(and (P x) (Q x) (R x x))");
        assert_eq!(Formula::Unary(UnaryPred::P, Var::X).to_string(), "(P x)");
    }

    #[test]
    fn equality_detection() {
        assert!(f("(exists y (and (R x y) (not (= x y))))").uses_equality());
        assert!(!f("(exists y (R x y))").uses_equality());
    }

    #[test]
    fn free_vars_of_open_subformula() {
        let g = parse_open("(and (R x y) (P z))").unwrap();
        assert_eq!(
            g.free_vars().into_iter().collect::<Vec<_>>(),
            vec![Var::X, Var::Y, Var::Z]
        );
        assert!(!g.has_solution_shape());
    }
}

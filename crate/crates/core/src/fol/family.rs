use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Formula, Var};

/// Structural family of a formula, keyed on its quantifier skeleton, guard
/// polarity and filter position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    /// forall y (not BIN(x,y) or exists z BIN(y,z))
    A,
    /// exists y (U(y) and forall z ...)
    B,
    /// exists y (not U(y) and forall z ...)
    C,
    /// forall y (not BIN(x,y) or exists z (BIN and U))
    D,
    /// forall y (not BIN(x,y) or exists z (BIN and not U))
    F,
    /// exists y forall z ...
    G,
    /// two existentials
    H,
    /// forall y (not BIN(x,y) or exists z (BIN(y,z) and BIN(x,z)))
    M,
    /// exists y (U(y) and forall z (not BIN(y,z) or (BIN(x,z) and V(z))))
    Z,
    #[serde(rename = "oth")]
    Other,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::A,
        Family::B,
        Family::C,
        Family::D,
        Family::F,
        Family::G,
        Family::H,
        Family::M,
        Family::Z,
        Family::Other,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::F => "F",
            Family::G => "G",
            Family::H => "H",
            Family::M => "M",
            Family::Z => "Z",
            Family::Other => "oth",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Binary atom whose two arguments are exactly `a` and `b`, in either order.
fn links(f: &Formula, a: Var, b: Var) -> bool {
    match f {
        Formula::Binary(_, u, v) => a != b && ((*u == a && *v == b) || (*u == b && *v == a)),
        _ => false,
    }
}

fn unary_on(f: &Formula, v: Var) -> bool {
    matches!(f, Formula::Unary(_, u) if *u == v)
}

fn negated(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Not(body) => Some(body),
        _ => None,
    }
}

/// Splits a two-child list into (matching `first`, the other), trying both orders.
fn pair<'a>(
    children: &'a [Formula],
    first: impl Fn(&Formula) -> bool,
) -> Option<(&'a Formula, &'a Formula)> {
    match children {
        [a, b] if first(a) => Some((a, b)),
        [a, b] if first(b) => Some((b, a)),
        _ => None,
    }
}

/// `forall y (or (not BIN(x,y)) REST)` → `(y, REST)`.
fn guarded_universal(f: &Formula) -> Option<(Var, &Formula)> {
    let Formula::Forall(y, body) = f else {
        return None;
    };
    let Formula::Or(children) = body.as_ref() else {
        return None;
    };
    let (_, rest) = pair(children, |c| {
        negated(c).is_some_and(|g| links(g, Var::X, *y))
    })?;
    Some((*y, rest))
}

fn exists_body(f: &Formula) -> Option<(Var, &Formula)> {
    match f {
        Formula::Exists(v, body) => Some((*v, body)),
        _ => None,
    }
}

fn family_a(f: &Formula) -> bool {
    guarded_universal(f)
        .and_then(|(y, rest)| exists_body(rest).map(|(z, body)| links(body, y, z)))
        .unwrap_or(false)
}

/// For D/F/M: the existential's body is a two-conjunct `and` with a
/// BIN(y,z) link and a second conjunct checked by `filter`.
fn universal_with_filter(f: &Formula, filter: impl Fn(&Formula, Var) -> bool) -> bool {
    let Some((y, rest)) = guarded_universal(f) else {
        return false;
    };
    let Some((z, body)) = exists_body(rest) else {
        return false;
    };
    let Formula::And(children) = body else {
        return false;
    };
    match children.as_slice() {
        [a, b] => (links(a, y, z) && filter(b, z)) || (links(b, y, z) && filter(a, z)),
        _ => false,
    }
}

fn family_d(f: &Formula) -> bool {
    universal_with_filter(f, |c, z| unary_on(c, z))
}

fn family_f(f: &Formula) -> bool {
    universal_with_filter(f, |c, z| negated(c).is_some_and(|u| unary_on(u, z)))
}

fn family_m(f: &Formula) -> bool {
    universal_with_filter(f, |c, z| links(c, Var::X, z))
}

/// `exists y (and GUARD (forall z BODY))` → `(y, GUARD, z, BODY)`.
fn guarded_existential(f: &Formula) -> Option<(Var, &Formula, Var, &Formula)> {
    let (y, body) = exists_body(f)?;
    let Formula::And(children) = body else {
        return None;
    };
    let (inner, guard) = pair(children, Formula::is_quantifier)?;
    let Formula::Forall(z, inner_body) = inner else {
        return None;
    };
    Some((y, guard, *z, inner_body))
}

fn family_z(f: &Formula) -> bool {
    let Some((y, guard, z, body)) = guarded_existential(f) else {
        return false;
    };
    if !unary_on(guard, y) {
        return false;
    }
    let Formula::Or(disjuncts) = body else {
        return false;
    };
    let Some((_, filtered)) = pair(disjuncts, |c| negated(c).is_some_and(|g| links(g, y, z)))
    else {
        return false;
    };
    let Formula::And(conjuncts) = filtered else {
        return false;
    };
    pair(conjuncts, |c| links(c, Var::X, z)).is_some_and(|(_, v)| unary_on(v, z))
}

fn family_b(f: &Formula) -> bool {
    guarded_existential(f).is_some_and(|(y, guard, _, _)| unary_on(guard, y))
}

fn family_c(f: &Formula) -> bool {
    guarded_existential(f)
        .is_some_and(|(y, guard, _, _)| negated(guard).is_some_and(|u| unary_on(u, y)))
}

fn family_g(f: &Formula) -> bool {
    exists_body(f).is_some_and(|(_, body)| matches!(body, Formula::Forall(..)))
}

fn family_h(f: &Formula) -> bool {
    fn all_existential(f: &Formula) -> bool {
        !matches!(f, Formula::Forall(..)) && f.children().iter().all(all_existential)
    }
    matches!(f, Formula::Exists(..)) && f.quantifier_depth() == 2 && all_existential(f)
}

/// The quantified part of a formula: the formula itself, or the single
/// quantified child of a top-level `and`/`or` whose other children are
/// quantifier-free.
fn quantified_core(f: &Formula) -> &Formula {
    if let Formula::And(children) | Formula::Or(children) = f {
        let mut quantified = children.iter().filter(|c| c.quantifier_depth() > 0);
        if let (Some(only), None) = (quantified.next(), quantified.next()) {
            return only;
        }
    }
    f
}

pub(super) fn classify(f: &Formula) -> Family {
    let core = quantified_core(f);
    // Z is a special case of B, so it is tested first.
    let checks: [(Family, fn(&Formula) -> bool); 9] = [
        (Family::A, family_a),
        (Family::Z, family_z),
        (Family::B, family_b),
        (Family::C, family_c),
        (Family::D, family_d),
        (Family::F, family_f),
        (Family::G, family_g),
        (Family::H, family_h),
        (Family::M, family_m),
    ];
    checks
        .iter()
        .find(|(_, check)| check(core))
        .map(|(family, _)| *family)
        .unwrap_or(Family::Other)
}

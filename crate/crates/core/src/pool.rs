//! Gold templates, near-miss mutation, and the frozen tiered hypothesis pool.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::fol::{parse, random_formula, BinaryPred, Family, Formula, FormulaShape, UnaryPred, Var};
use crate::rng;

const QD0_TEMPLATES: &[&str] = &[
    "(P x)",
    "(Q x)",
    "(not (P x))",
    "(not (Q x))",
    "(R x x)",
    "(S x x)",
    "(not (R x x))",
    "(not (S x x))",
    "(and (P x) (Q x))",
    "(or (P x) (Q x))",
    "(and (P x) (not (Q x)))",
    "(or (not (P x)) (Q x))",
    "(and (not (P x)) (not (Q x)))",
    "(or (not (P x)) (not (Q x)))",
];

const QD1_TEMPLATES: &[&str] = &[
    "(exists y (R x y))",
    "(exists y (S x y))",
    "(exists y (R y x))",
    "(exists y (S y x))",
    "(exists y (and (R x y) (P y)))",
    "(exists y (and (R x y) (Q y)))",
    "(exists y (and (S x y) (P y)))",
    "(exists y (and (R x y) (not (P y))))",
    "(exists y (and (S x y) (not (Q y))))",
    "(forall y (or (not (R x y)) (P y)))",
    "(forall y (or (not (R y x)) (P y)))",
    "(forall y (or (not (S x y)) (Q y)))",
    "(forall y (or (not (R x y)) (Q y)))",
    "(forall y (or (not (S y x)) (P y)))",
    "(and (P x) (exists y (R x y)))",
    "(and (not (P x)) (exists y (and (R x y) (Q y))))",
    "(or (P x) (forall y (or (not (R x y)) (Q y))))",
    "(and (Q x) (exists y (S x y)))",
];

const QD2_TEMPLATES: &[&str] = &[
    "(exists y (forall z (or (not (R y z)) (S x z))))",
    "(exists y (forall z (or (not (S y z)) (R x z))))",
    "(exists y (and (P y) (forall z (or (not (R y z)) (S x z)))))",
    "(exists y (and (Q y) (forall z (or (not (S y z)) (R x z)))))",
    "(exists y (and (not (P y)) (forall z (or (not (R y z)) (S x z)))))",
    "(forall y (or (not (R x y)) (exists z (S y z))))",
    "(forall y (or (not (S x y)) (exists z (R y z))))",
    "(forall y (or (not (R x y)) (exists z (and (S y z) (P z)))))",
    "(forall y (or (not (R x y)) (exists z (and (S y z) (Q z)))))",
    "(forall y (exists z (and (R x y) (S y z))))",
    "(and (P x) (exists y (forall z (or (not (R y z)) (S x z)))))",
    "(and (not (Q x)) (forall y (or (not (R x y)) (exists z (S y z)))))",
    "(or (P x) (exists y (forall z (or (not (R y z)) (S x z)))))",
    "(or (not (P x)) (forall y (or (not (R x y)) (exists z (S y z)))))",
    "(and (Q x) (forall y (or (not (S x y)) (exists z (R y z)))))",
    "(exists y (forall z (or (not (R z y)) (S z x))))",
    "(forall y (or (not (R y x)) (exists z (S z y))))",
];

/// Further instances of the family patterns, chiefly nested-quantifier
/// shapes that keep `x` out of universal scope.
const FAMILY_TEMPLATES: &[&str] = &[
    "(exists y (and (R x y) (exists z (S y z))))",
    "(exists y (and (R x y) (exists z (and (S y z) (P z)))))",
    "(exists y (exists z (and (R x y) (R y z) (Q z))))",
    "(exists y (and (R x y) (forall z (or (not (S y z)) (P z)))))",
    "(exists y (and (S x y) (not (P y)) (forall z (or (not (R y z)) (Q z)))))",
    "(forall y (or (not (R x y)) (exists z (and (S y z) (R x z)))))",
    "(forall y (or (not (R x y)) (exists z (and (S y z) (not (P z))))))",
    "(exists y (and (P y) (forall z (or (not (R y z)) (and (S x z) (Q z))))))",
];

/// A gold-eligible formula with its structural tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Template {
    pub formula: Formula,
    pub qd: usize,
    pub ast: usize,
    pub family: Family,
    pub lift_hard: bool,
    pub subfamily: String,
}

impl Template {
    pub fn new(formula: Formula) -> Self {
        Template {
            qd: formula.quantifier_depth(),
            ast: formula.ast_size(),
            family: formula.classify_family(),
            lift_hard: formula.is_lift_hard(),
            subfamily: subfamily_key(&formula),
            formula,
        }
    }
}

/// Fine-grained structural signature: family, unary literals with polarity
/// and argument, binary symbols used, and per-binary-atom orientation
/// (`+` when the first argument was bound first, `-` otherwise, `=` for a
/// self-loop), joined with `|`.
pub fn subfamily_key(f: &Formula) -> String {
    fn walk(
        f: &Formula,
        negated: bool,
        scope: &mut Vec<Var>,
        guards: &mut BTreeSet<String>,
        symbols: &mut BTreeSet<&'static str>,
        orient: &mut String,
    ) {
        match f {
            Formula::Unary(p, v) => {
                guards.insert(format!("{}{}{}", if negated { '-' } else { '+' }, p.name(), v));
            }
            Formula::Binary(p, a, b) => {
                symbols.insert(p.name());
                let pos = |v: &Var| scope.iter().position(|s| s == v);
                orient.push(match pos(a).cmp(&pos(b)) {
                    std::cmp::Ordering::Less => '+',
                    std::cmp::Ordering::Greater => '-',
                    std::cmp::Ordering::Equal => '=',
                });
            }
            Formula::Eq(..) => {}
            Formula::Not(body) => walk(body, !negated, scope, guards, symbols, orient),
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                scope.push(*v);
                walk(body, negated, scope, guards, symbols, orient);
                scope.pop();
            }
            Formula::And(cs) | Formula::Or(cs) => {
                for c in cs {
                    walk(c, negated, scope, guards, symbols, orient);
                }
            }
        }
    }
    let (mut guards, mut symbols, mut orient) = (BTreeSet::new(), BTreeSet::new(), String::new());
    walk(f, false, &mut vec![Var::X], &mut guards, &mut symbols, &mut orient);
    let join = |it: Vec<String>| it.join(",");
    format!(
        "{}|{}|{}|{}",
        f.classify_family(),
        join(guards.into_iter().collect()),
        join(symbols.into_iter().map(String::from).collect()),
        orient
    )
}

/// The hand-written template lists, in their listed order.
pub fn core_templates() -> Vec<Formula> {
    QD0_TEMPLATES
        .iter()
        .chain(QD1_TEMPLATES)
        .chain(QD2_TEMPLATES)
        .chain(FAMILY_TEMPLATES)
        .map(|t| parse(t).expect("built-in template parses"))
        .collect()
}

/// The symbol-swap variants of `f` (including `f`), each also with every
/// binary atom's arguments reversed.
pub fn variants(f: &Formula) -> Vec<Formula> {
    let swap_u = |p: UnaryPred| p.swapped();
    let swap_b = |p: BinaryPred| p.swapped();
    let keep_u = |p: UnaryPred| p;
    let keep_b = |p: BinaryPred| p;
    let renamed = [
        f.clone(),
        f.rename(&swap_u, &keep_b),
        f.rename(&keep_u, &swap_b),
        f.rename(&swap_u, &swap_b),
    ];
    let mut out = Vec::new();
    for g in renamed {
        let conv = g.converse();
        out.push(g);
        out.push(conv);
    }
    out
}

fn push_unique(out: &mut Vec<Formula>, seen: &mut BTreeSet<Formula>, f: Formula) {
    if seen.insert(f.clone()) {
        out.push(f);
    }
}

/// The gold template pool: the core lists followed by their systematic
/// expansion, deduplicated, in a fixed order.
pub fn builtin_templates() -> Vec<Template> {
    let core = core_templates();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for f in &core {
        push_unique(&mut out, &mut seen, f.clone());
    }
    for f in &core {
        for v in variants(f) {
            push_unique(&mut out, &mut seen, v);
        }
    }
    out.into_iter().map(Template::new).collect()
}

fn drop_child(cs: &[Formula], i: usize, conjunctive: bool) -> Formula {
    let mut rest = cs.to_vec();
    rest.remove(i);
    match (rest.len(), conjunctive) {
        (1, _) => rest.pop().unwrap(),
        (_, true) => Formula::And(rest),
        (_, false) => Formula::Or(rest),
    }
}

fn mutation_sites(f: &Formula) -> Vec<Formula> {
    match f {
        Formula::Unary(p, v) => vec![Formula::Unary(p.swapped(), *v)],
        Formula::Binary(p, a, b) => {
            let mut out = vec![Formula::Binary(p.swapped(), *a, *b)];
            if a != b {
                out.push(Formula::Binary(*p, *b, *a));
            }
            out
        }
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let requant = |b: Formula| match f {
                Formula::Forall(..) => Formula::forall(*v, b),
                _ => Formula::exists(*v, b),
            };
            match body.as_ref() {
                Formula::And(cs) => (0..cs.len())
                    .map(|i| requant(drop_child(cs, i, true)))
                    .collect(),
                // Universal guards appear as negated literals of a disjunction.
                Formula::Or(cs) => (0..cs.len())
                    .filter(|&i| matches!(&cs[i], Formula::Not(inner) if inner.is_atom()))
                    .map(|i| requant(drop_child(cs, i, false)))
                    .collect(),
                _ => Vec::new(),
            }
        }
        _ => Vec::new(),
    }
}

/// Near-miss mutants of `gold`: one predicate swap, one guard drop, or one
/// argument swap, applied at every applicable position. Results are
/// solution-shaped, distinct from `gold` and from each other, in pre-order
/// of the mutated position.
pub fn mutate(gold: &Formula) -> Vec<Formula> {
    let mut seen = BTreeSet::new();
    seen.insert(gold.clone());
    let mut out = Vec::new();
    for m in gold.single_rewrites(&mutation_sites) {
        if m.validate().is_ok() {
            push_unique(&mut out, &mut seen, m);
        }
    }
    out
}

/// Canonical shortcut hypotheses: literals on `x`, two-literal
/// combinations, and single-quantifier patterns, all with AST at most 10.
/// Argument orders of commutative connectives are fixed so that equivalent
/// reorderings are not listed twice.
pub fn shortcut_candidates() -> Vec<Formula> {
    use Var::{X, Y};
    let atoms_x = [
        Formula::Unary(UnaryPred::P, X),
        Formula::Unary(UnaryPred::Q, X),
        Formula::Binary(BinaryPred::R, X, X),
        Formula::Binary(BinaryPred::S, X, X),
    ];
    let lit = |a: &Formula, pos: bool| if pos { a.clone() } else { Formula::not(a.clone()) };
    let mut out = Vec::new();
    for pos in [true, false] {
        out.extend(atoms_x.iter().map(|a| lit(a, pos)));
    }
    for i in 0..atoms_x.len() {
        for j in i + 1..atoms_x.len() {
            for (pi, pj) in [(true, true), (true, false), (false, true), (false, false)] {
                let pair = vec![lit(&atoms_x[i], pi), lit(&atoms_x[j], pj)];
                out.push(Formula::and(pair.clone()));
                out.push(Formula::or(pair));
            }
        }
    }
    let links: Vec<Formula> = BinaryPred::ALL
        .iter()
        .flat_map(|&p| [Formula::Binary(p, X, Y), Formula::Binary(p, Y, X)])
        .collect();
    let loops: Vec<Formula> = BinaryPred::ALL
        .iter()
        .flat_map(|&p| [lit(&Formula::Binary(p, Y, Y), true), lit(&Formula::Binary(p, Y, Y), false)])
        .collect();
    let unary_y: Vec<Formula> = UnaryPred::ALL
        .iter()
        .flat_map(|&p| [lit(&Formula::Unary(p, Y), true), lit(&Formula::Unary(p, Y), false)])
        .collect();
    for b in &links {
        for pos in [true, false] {
            out.push(Formula::exists(Y, lit(b, pos)));
            out.push(Formula::forall(Y, lit(b, pos)));
        }
    }
    for b in &links {
        for u in unary_y.iter().chain(&loops) {
            out.push(Formula::exists(Y, Formula::and(vec![b.clone(), u.clone()])));
            out.push(Formula::forall(Y, Formula::or(vec![Formula::not(b.clone()), u.clone()])));
            out.push(Formula::exists(Y, Formula::and(vec![Formula::not(b.clone()), u.clone()])));
            out.push(Formula::forall(Y, Formula::or(vec![b.clone(), u.clone()])));
        }
    }
    for r in links.iter().filter(|b| matches!(b, Formula::Binary(BinaryPred::R, ..))) {
        for s in links.iter().filter(|b| matches!(b, Formula::Binary(BinaryPred::S, ..))) {
            out.push(Formula::exists(Y, Formula::and(vec![r.clone(), s.clone()])));
            out.push(Formula::forall(Y, Formula::or(vec![Formula::not(r.clone()), s.clone()])));
        }
    }
    for a in &atoms_x {
        for pos in [true, false] {
            for b in &links {
                for q in [Formula::exists(Y, b.clone()), Formula::forall(Y, Formula::not(b.clone()))] {
                    out.push(Formula::and(vec![lit(a, pos), q.clone()]));
                    out.push(Formula::or(vec![lit(a, pos), q]));
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut unique = Vec::new();
    for f in out {
        if f.ast_size() <= 10 && f.quantifier_depth() <= 1 && f.validate().is_ok() {
            push_unique(&mut unique, &mut seen, f);
        }
    }
    unique
}

/// Requested tier sizes of a frozen pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub tier1: usize,
    pub tier2: usize,
    pub tier3: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            tier1: 300,
            tier2: 700,
            tier3: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Shortcut,
    Mutant,
    Complex,
}

impl Tier {
    pub fn number(self) -> u8 {
        match self {
            Tier::Shortcut => 1,
            Tier::Mutant => 2,
            Tier::Complex => 3,
        }
    }
}

/// Frozen candidate-hypothesis pool, organized in three disjoint tiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrozenPool {
    pub seed: u64,
    pub tier1: Vec<Formula>,
    pub tier2: Vec<Formula>,
    pub tier3: Vec<Formula>,
}

/// Deterministic choice of `n` items: a fixed prefix of `keep` items, then a
/// seeded sample of the rest, each part in original order.
fn choose(mut items: Vec<Formula>, keep: usize, n: usize, seed: u64) -> Vec<Formula> {
    if items.len() <= n {
        return items;
    }
    let keep = keep.min(n);
    let rest = items.split_off(keep);
    let mut idx: Vec<usize> = (0..rest.len()).collect();
    idx.shuffle(&mut rng::rng(seed));
    let picked: BTreeSet<usize> = idx[..n - keep].iter().copied().collect();
    items.extend(
        rest.into_iter()
            .enumerate()
            .filter(|(i, _)| picked.contains(i))
            .map(|(_, f)| f),
    );
    items
}

pub fn build_frozen_pool(golds: &[Formula], seed: u64) -> FrozenPool {
    build_frozen_pool_with(golds, PoolConfig::default(), seed)
}

pub fn build_frozen_pool_with(golds: &[Formula], config: PoolConfig, seed: u64) -> FrozenPool {
    let mut taken: BTreeSet<Formula> = BTreeSet::new();

    let mut shortcuts = shortcut_candidates();
    shortcuts.sort_by_key(|f| f.ast_size());
    let always = shortcuts.iter().filter(|f| f.ast_size() <= 6).count();
    let tier1 = choose(shortcuts, always, config.tier1, rng::derive(seed, 1));
    taken.extend(tier1.iter().cloned());

    let mut mutants = Vec::new();
    let mut seen = taken.clone();
    for g in golds {
        for m in mutate(g) {
            push_unique(&mut mutants, &mut seen, m);
        }
    }
    // Single-step mutants first, then two-step mutants as filler.
    let single = mutants.len();
    for g in golds {
        for m in mutate(g).iter().flat_map(mutate) {
            push_unique(&mut mutants, &mut seen, m);
        }
    }
    let tier2 = choose(mutants, single, config.tier2, rng::derive(seed, 2));
    taken.extend(tier2.iter().cloned());

    let gold_set: BTreeSet<&Formula> = golds.iter().collect();
    let mut complex = Vec::new();
    let mut seen = taken.clone();
    for f in core_templates().iter().flat_map(variants) {
        if f.quantifier_depth() == 2 && !gold_set.contains(&f) {
            push_unique(&mut complex, &mut seen, f);
        }
    }
    for g in golds.iter().filter(|g| g.quantifier_depth() == 2) {
        for m in mutate(g).iter().flat_map(mutate) {
            if m.quantifier_depth() == 2 && !gold_set.contains(&m) {
                push_unique(&mut complex, &mut seen, m);
            }
        }
    }
    // The mutant space of a small gold set can run dry; complex distractors
    // make up any shortfall so the pool keeps its overall size.
    let tier3_size = config.tier3
        + config.tier1.saturating_sub(tier1.len())
        + config.tier2.saturating_sub(tier2.len());
    let mut tier3 = choose(complex, 0, tier3_size, rng::derive(seed, 3));
    let mut r = rng::rng(rng::derive(seed, 4));
    let shape = FormulaShape {
        max_qd: 2,
        max_depth: 4,
        equality: false,
    };
    while tier3.len() < tier3_size {
        let f = random_formula(&mut r, &shape);
        if f.quantifier_depth() == 2 && (12..=30).contains(&f.ast_size()) && !gold_set.contains(&f) {
            push_unique(&mut tier3, &mut seen, f);
        }
    }
    FrozenPool {
        seed,
        tier1,
        tier2,
        tier3,
    }
}

impl FrozenPool {
    pub fn len(&self) -> usize {
        self.tier1.len() + self.tier2.len() + self.tier3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Members with their tiers, tier by tier.
    pub fn members(&self) -> impl Iterator<Item = (Tier, &Formula)> {
        self.tier1
            .iter()
            .map(|f| (Tier::Shortcut, f))
            .chain(self.tier2.iter().map(|f| (Tier::Mutant, f)))
            .chain(self.tier3.iter().map(|f| (Tier::Complex, f)))
    }

    /// One tab-separated line per member: tier, QD, AST, family, formula.
    pub fn manifest(&self) -> String {
        let mut out = format!("# frozen pool seed={} size={}\n", self.seed, self.len());
        for (tier, f) in self.members() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                tier.number(),
                f.quantifier_depth(),
                f.ast_size(),
                f.classify_family(),
                f
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(text: &str) -> Formula {
        parse(text).unwrap()
    }

    fn texts(fs: &[Formula]) -> Vec<String> {
        fs.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn template_pool_shape() {
        let t = builtin_templates();
        assert!((180..=240).contains(&t.len()), "{} templates", t.len());
        let all: Vec<String> = t.iter().map(|t| t.formula.to_string()).collect();
        for core in QD0_TEMPLATES.iter().chain(QD1_TEMPLATES).chain(QD2_TEMPLATES) {
            assert!(all.contains(&core.to_string()), "{core}");
        }
        assert!(all.contains(&"(exists y (S x y))".to_string()));
        assert!(all.contains(&"(exists y (R y x))".to_string()));
        assert!(t.iter().all(|t| !t.formula.uses_equality()));
        assert!(t.iter().all(|t| t.formula.validate().is_ok()));
        let distinct: BTreeSet<&Formula> = t.iter().map(|t| &t.formula).collect();
        assert_eq!(distinct.len(), t.len());
        assert_eq!(builtin_templates(), t);
    }

    #[test]
    fn template_tags() {
        let t = Template::new(f("(exists y (and (P y) (forall z (or (not (R y z)) (S x z)))))"));
        assert_eq!((t.qd, t.ast, t.family, t.lift_hard), (2, 15, Family::B, true));
        assert_eq!(t.subfamily, "B|+Py|R,S|++");
        let u = Template::new(f("(exists y (and (R y x) (not (Q y))))"));
        assert_eq!(u.subfamily, "oth|-Qy|R|-");
    }

    #[test]
    fn mutants_of_guarded_existential() {
        let m = texts(&mutate(&f("(exists y (and (R x y) (P y)))")));
        for expected in [
            "(exists y (and (S x y) (P y)))",
            "(exists y (R x y))",
            "(exists y (and (R y x) (P y)))",
            "(exists y (and (R x y) (Q y)))",
        ] {
            assert!(m.contains(&expected.to_string()), "missing {expected} in {m:?}");
        }
        // (exists y (P y)) loses x and is not a mutant.
        assert_eq!(m.len(), 4);
    }

    #[test]
    fn mutants_without_guards() {
        let m = texts(&mutate(&f("(exists y (R x y))")));
        assert_eq!(m, vec!["(exists y (S x y))", "(exists y (R y x))"]);
        assert_eq!(texts(&mutate(&f("(R x x)"))), vec!["(S x x)"]);
    }

    #[test]
    fn universal_guard_drop() {
        let m = texts(&mutate(&f("(exists y (forall z (or (not (R y z)) (S x z))))")));
        assert!(m.contains(&"(exists y (forall z (S x z)))".to_string()));
    }

    #[test]
    fn mutants_are_well_formed_and_new() {
        for t in builtin_templates() {
            for m in mutate(&t.formula) {
                assert!(m.validate().is_ok());
                assert_ne!(m, t.formula);
            }
        }
    }

    #[test]
    fn shortcuts_obey_bounds() {
        let s = shortcut_candidates();
        assert!(s.len() >= 300, "{} shortcuts", s.len());
        assert!(s.iter().all(|f| f.quantifier_depth() <= 1 && f.ast_size() <= 10));
        assert!(texts(&s).contains(&"(not (S x x))".to_string()));
    }

    #[test]
    fn frozen_pool_tiers() {
        let golds: Vec<Formula> = builtin_templates().into_iter().map(|t| t.formula).collect();
        let pool = build_frozen_pool(&golds, 17);
        assert!(
            (1350..=1650).contains(&pool.len()),
            "pool size {} ({}/{}/{})",
            pool.len(),
            pool.tier1.len(),
            pool.tier2.len(),
            pool.tier3.len()
        );
        assert!(pool.tier1.iter().all(|f| f.quantifier_depth() <= 1 && f.ast_size() <= 10));
        assert!(pool.tier3.iter().all(|f| f.quantifier_depth() == 2));
        let mut all = BTreeSet::new();
        for (_, m) in pool.members() {
            assert!(all.insert(m.clone()), "duplicate {m}");
            assert!(m.validate().is_ok() && !m.uses_equality());
        }
        let mutants: BTreeSet<Formula> = golds
            .iter()
            .flat_map(mutate)
            .flat_map(|m| {
                let mut two = mutate(&m);
                two.push(m);
                two
            })
            .collect();
        assert!(pool.tier2.iter().all(|m| mutants.contains(m)));
        assert_eq!(build_frozen_pool(&golds, 17), pool);
        assert_ne!(build_frozen_pool(&golds, 18), pool);
        assert_eq!(pool.manifest().lines().count(), pool.len() + 1);
    }
}

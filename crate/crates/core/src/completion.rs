//! Existential-completion semantics over partially observed worlds.
//!
//! A formula is grounded over a [`PartialWorld`] into a hash-consed Boolean
//! circuit whose inputs are the world's unknown atoms (known atoms fold to
//! constants). The circuit is translated to clause form and handed to the
//! in-repo solver.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{Formula, Var};
use crate::sat::{at_most_k, Budget, Cnf, Lit, SolveResult, Solver};
use crate::world::{GroundAtom, PartialWorld, Truth, World};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error("solver budget exhausted after {conflicts} conflicts")]
    ResourceLimit { conflicts: u64 },
}

pub type GateId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Const(bool),
    Input(usize),
    Not(GateId),
    And(Vec<GateId>),
    Or(Vec<GateId>),
}

const FALSE: GateId = 0;
const TRUE: GateId = 1;

/// Hash-consed circuit with constant folding.
#[derive(Debug, Clone)]
pub struct Circuit {
    gates: Vec<Gate>,
    table: HashMap<Gate, GateId>,
}

impl Default for Circuit {
    fn default() -> Self {
        let mut c = Circuit {
            gates: Vec::new(),
            table: HashMap::new(),
        };
        c.intern(Gate::Const(false));
        c.intern(Gate::Const(true));
        c
    }
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, gate: Gate) -> GateId {
        if let Some(&id) = self.table.get(&gate) {
            return id;
        }
        let id = self.gates.len();
        self.gates.push(gate.clone());
        self.table.insert(gate, id);
        id
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id]
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn constant(&mut self, value: bool) -> GateId {
        if value {
            TRUE
        } else {
            FALSE
        }
    }

    pub fn as_const(&self, id: GateId) -> Option<bool> {
        match self.gates[id] {
            Gate::Const(b) => Some(b),
            _ => None,
        }
    }

    pub fn input(&mut self, var: usize) -> GateId {
        self.intern(Gate::Input(var))
    }

    pub fn not(&mut self, g: GateId) -> GateId {
        match self.gates[g] {
            Gate::Const(b) => self.constant(!b),
            Gate::Not(inner) => inner,
            _ => self.intern(Gate::Not(g)),
        }
    }

    fn junction(&mut self, children: Vec<GateId>, conjunctive: bool) -> GateId {
        // Identity element of the junction and its absorbing element.
        let (unit, zero) = if conjunctive { (TRUE, FALSE) } else { (FALSE, TRUE) };
        let mut kept = Vec::with_capacity(children.len());
        for c in children {
            if c == zero {
                return zero;
            }
            if c == unit {
                continue;
            }
            // Flatten nested junctions of the same kind.
            match &self.gates[c] {
                Gate::And(inner) if conjunctive => kept.extend(inner.iter().copied()),
                Gate::Or(inner) if !conjunctive => kept.extend(inner.iter().copied()),
                _ => kept.push(c),
            }
        }
        kept.sort_unstable();
        kept.dedup();
        for &c in &kept {
            if let Gate::Not(inner) = self.gates[c] {
                if kept.binary_search(&inner).is_ok() {
                    return zero;
                }
            }
        }
        match kept.len() {
            0 => unit,
            1 => kept[0],
            _ if conjunctive => self.intern(Gate::And(kept)),
            _ => self.intern(Gate::Or(kept)),
        }
    }

    pub fn and(&mut self, children: Vec<GateId>) -> GateId {
        self.junction(children, true)
    }

    pub fn or(&mut self, children: Vec<GateId>) -> GateId {
        self.junction(children, false)
    }

    /// Evaluates `root` with input `i` set to `inputs[i]`.
    pub fn eval(&self, root: GateId, inputs: &[bool]) -> bool {
        let mut memo: HashMap<GateId, bool> = HashMap::new();
        self.eval_memo(root, inputs, &mut memo)
    }

    fn eval_memo(&self, id: GateId, inputs: &[bool], memo: &mut HashMap<GateId, bool>) -> bool {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let v = match &self.gates[id] {
            Gate::Const(b) => *b,
            Gate::Input(i) => inputs[*i],
            Gate::Not(g) => !self.eval_memo(*g, inputs, memo),
            Gate::And(cs) => cs.iter().all(|&c| self.eval_memo(c, inputs, memo)),
            Gate::Or(cs) => cs.iter().any(|&c| self.eval_memo(c, inputs, memo)),
        };
        memo.insert(id, v);
        v
    }
}

/// The grounded EC constraint of one formula over one partial world.
#[derive(Debug, Clone)]
pub struct GroundedConstraint {
    pub circuit: Circuit,
    /// Unknown atoms in canonical order; input `i` stands for `inputs[i]`.
    pub inputs: Vec<GroundAtom>,
    /// Per element, the gate asserting "formula holds at a iff a is in the target".
    pub elements: Vec<GateId>,
    /// Conjunction of all element gates.
    pub root: GateId,
}

struct Grounder<'a> {
    pw: &'a PartialWorld,
    vars: HashMap<GroundAtom, usize>,
    circuit: Circuit,
}

impl Grounder<'_> {
    fn atom(&mut self, atom: GroundAtom) -> GateId {
        match self.pw.truth(atom) {
            Truth::True => TRUE,
            Truth::False => FALSE,
            Truth::Unknown => {
                let var = self.vars[&atom];
                self.circuit.input(var)
            }
        }
    }

    fn ground(&mut self, f: &Formula, env: &mut [usize; 4]) -> GateId {
        match f {
            Formula::Unary(p, v) => self.atom(GroundAtom::Unary(*p, env[v.index()])),
            Formula::Binary(p, a, b) => {
                self.atom(GroundAtom::Binary(*p, env[a.index()], env[b.index()]))
            }
            Formula::Eq(a, b) => self.circuit.constant(env[a.index()] == env[b.index()]),
            Formula::Not(body) => {
                let g = self.ground(body, env);
                self.circuit.not(g)
            }
            Formula::And(cs) | Formula::Or(cs) => {
                let gs = cs.iter().map(|c| self.ground(c, env)).collect();
                if matches!(f, Formula::And(_)) {
                    self.circuit.and(gs)
                } else {
                    self.circuit.or(gs)
                }
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let saved = env[v.index()];
                let mut gs = Vec::with_capacity(self.pw.size());
                for d in 0..self.pw.size() {
                    env[v.index()] = d;
                    gs.push(self.ground(body, env));
                }
                env[v.index()] = saved;
                if matches!(f, Formula::Forall(..)) {
                    self.circuit.and(gs)
                } else {
                    self.circuit.or(gs)
                }
            }
        }
    }
}

/// Grounds `f` over `pw`: quantifiers are expanded over the domain and the
/// result asserts, for every element, that `f` holds there exactly when the
/// element is in the target.
pub fn ground(f: &Formula, pw: &PartialWorld) -> GroundedConstraint {
    let inputs = pw.unknown_atoms();
    let vars = inputs.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let mut g = Grounder {
        pw,
        vars,
        circuit: Circuit::new(),
    };
    let mut elements = Vec::with_capacity(pw.size());
    for a in 0..pw.size() {
        let mut env = [usize::MAX; 4];
        env[Var::X.index()] = a;
        let holds = g.ground(f, &mut env);
        let gate = if pw.target()[a] {
            holds
        } else {
            g.circuit.not(holds)
        };
        elements.push(gate);
    }
    let root = g.circuit.and(elements.clone());
    GroundedConstraint {
        circuit: g.circuit,
        inputs,
        elements,
        root,
    }
}

/// Clause-form translation state: input `i` is solver variable `i`, every
/// other reachable non-constant gate gets a fresh variable.
struct Tseitin<'a> {
    circuit: &'a Circuit,
    cnf: Cnf,
    lits: HashMap<GateId, Lit>,
}

impl Tseitin<'_> {
    fn lit(&mut self, id: GateId) -> Lit {
        if let Some(&l) = self.lits.get(&id) {
            return l;
        }
        let l = match self.circuit.gate(id) {
            Gate::Const(_) => unreachable!("constants are folded before translation"),
            Gate::Input(i) => Lit::pos(*i),
            Gate::Not(g) => !self.lit(*g),
            Gate::And(cs) | Gate::Or(cs) => {
                let conjunctive = matches!(self.circuit.gate(id), Gate::And(_));
                let child_lits: Vec<Lit> = cs.clone().into_iter().map(|c| self.lit(c)).collect();
                let out = Lit::pos(self.cnf.new_var());
                // and: out -> c_i, (all c_i) -> out; or is the dual.
                let sign = |l: Lit| if conjunctive { l } else { !l };
                for &c in &child_lits {
                    self.cnf.add_clause([!sign(out), sign(c)]);
                }
                let mut long: Vec<Lit> = child_lits.iter().map(|&c| !sign(c)).collect();
                long.push(sign(out));
                self.cnf.add_clause(long);
                out
            }
        };
        self.lits.insert(id, l);
        l
    }
}

impl GroundedConstraint {
    /// Number of unknown-atom variables.
    pub fn num_vars(&self) -> usize {
        self.inputs.len()
    }

    /// Constant value of the whole constraint, when it folded to one.
    pub fn as_const(&self) -> Option<bool> {
        self.circuit.as_const(self.root)
    }

    /// Truth of the constraint under an assignment of the unknown atoms.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.circuit.eval(self.root, assignment)
    }

    /// Number of elements whose constraint fails under `assignment`.
    pub fn mismatches(&self, assignment: &[bool]) -> usize {
        self.elements
            .iter()
            .filter(|&&e| !self.circuit.eval(e, assignment))
            .count()
    }

    fn translator(&self) -> Tseitin<'_> {
        Tseitin {
            circuit: &self.circuit,
            cnf: Cnf::with_vars(self.num_vars()),
            lits: HashMap::new(),
        }
    }

    /// Clause form of the constraint; satisfiable exactly when some
    /// completion matches. The first `num_vars()` variables are the inputs.
    pub fn to_cnf(&self) -> Cnf {
        let mut t = self.translator();
        match self.as_const() {
            Some(true) => {}
            Some(false) => t.cnf.add_clause([]),
            None => {
                let root = t.lit(self.root);
                t.cnf.add_clause([root]);
            }
        }
        t.cnf
    }

    /// Clause form allowing at most `k` element-level mismatches: each
    /// element gets a relaxation variable that may switch its constraint off.
    pub fn to_relaxed_cnf(&self, k: usize) -> Cnf {
        let mut t = self.translator();
        let mut relax = Vec::with_capacity(self.elements.len());
        for &e in &self.elements {
            match self.circuit.as_const(e) {
                Some(true) => {}
                Some(false) => {
                    let r = Lit::pos(t.cnf.new_var());
                    t.cnf.add_clause([r]);
                    relax.push(r);
                }
                None => {
                    let l = t.lit(e);
                    let r = Lit::pos(t.cnf.new_var());
                    t.cnf.add_clause([r, l]);
                    relax.push(r);
                }
            }
        }
        at_most_k(&mut t.cnf, &relax, k);
        t.cnf
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = String::from("c unknown atoms:");
        for (i, atom) in self.inputs.iter().enumerate() {
            out.push_str(&format!(" {}={}", i + 1, atom));
        }
        out.push('\n');
        out.push_str(&self.to_cnf().to_dimacs());
        out
    }
}

/// Truth values for every unknown atom of one world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionWitness {
    pub assignment: Vec<(GroundAtom, bool)>,
}

impl CompletionWitness {
    fn from_model(inputs: &[GroundAtom], model: &[bool]) -> Self {
        CompletionWitness {
            assignment: inputs.iter().copied().zip(model.iter().copied()).collect(),
        }
    }

    pub fn value(&self, atom: GroundAtom) -> Option<bool> {
        self.assignment
            .iter()
            .find(|(a, _)| *a == atom)
            .map(|(_, v)| *v)
    }

    /// The completed world. Panics if an unknown atom of `pw` is unassigned.
    pub fn apply(&self, pw: &PartialWorld) -> World {
        let map: HashMap<GroundAtom, bool> = self.assignment.iter().copied().collect();
        pw.complete(|atom| *map.get(&atom).expect("witness covers every unknown atom"))
    }
}

fn solve(cnf: &Cnf, budget: Budget) -> Result<Option<Vec<bool>>, CompletionError> {
    match Solver::from_cnf(cnf).solve(budget) {
        SolveResult::Sat(model) => Ok(Some(model)),
        SolveResult::Unsat => Ok(None),
        SolveResult::Unknown { conflicts } => Err(CompletionError::ResourceLimit { conflicts }),
    }
}

/// Whether some completion of `pw` makes `f` match the target, with a
/// witnessing completion when it does.
pub fn ec_valid_world_with(
    f: &Formula,
    pw: &PartialWorld,
    budget: Budget,
) -> Result<Option<CompletionWitness>, CompletionError> {
    let gc = ground(f, pw);
    let model = match gc.as_const() {
        Some(true) => Some(vec![false; gc.num_vars()]),
        Some(false) => None,
        None => solve(&gc.to_cnf(), budget)?,
    };
    Ok(model.map(|m| CompletionWitness::from_model(&gc.inputs, &m[..gc.num_vars()])))
}

pub fn ec_valid_world(
    f: &Formula,
    pw: &PartialWorld,
) -> Result<Option<CompletionWitness>, CompletionError> {
    ec_valid_world_with(f, pw, Budget::default())
}

/// Conjunction of per-world validity; each world is completed independently.
pub fn ec_valid_all<'a>(
    f: &Formula,
    worlds: impl IntoIterator<Item = &'a PartialWorld>,
    budget: Budget,
) -> Result<bool, CompletionError> {
    for pw in worlds {
        if ec_valid_world_with(f, pw, budget)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest number of elements on which `f` disagrees with the target, over
/// all completions of `pw`.
pub fn min_mismatch_with(
    f: &Formula,
    pw: &PartialWorld,
    budget: Budget,
) -> Result<usize, CompletionError> {
    let gc = ground(f, pw);
    if gc.num_vars() == 0 {
        return Ok(gc.mismatches(&[]));
    }
    // Any completion bounds the minimum from above.
    let upper = gc.mismatches(&vec![false; gc.num_vars()]);
    for k in 0..upper {
        if solve(&gc.to_relaxed_cnf(k), budget)?.is_some() {
            return Ok(k);
        }
    }
    Ok(upper)
}

pub fn min_mismatch(f: &Formula, pw: &PartialWorld) -> Result<usize, CompletionError> {
    min_mismatch_with(f, pw, Budget::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::{parse, BinaryPred};
    use crate::semantics::matches;

    fn f(text: &str) -> Formula {
        parse(text).unwrap()
    }

    /// Two-element world, every atom false, R(a0,a1) unknown.
    fn one_unknown(target: Vec<bool>) -> PartialWorld {
        let mut w = World::empty(2);
        w.set_target(target);
        let mut pw = PartialWorld::from(&w);
        pw.set_truth(GroundAtom::Binary(BinaryPred::R, 0, 1), Truth::Unknown);
        pw
    }

    #[test]
    fn single_unknown_successor() {
        let g = f("(exists y (R x y))");
        let pw = one_unknown(vec![true, false]);
        let witness = ec_valid_world(&g, &pw).unwrap().expect("valid");
        assert_eq!(witness.value(GroundAtom::Binary(BinaryPred::R, 0, 1)), Some(true));
        assert!(matches(&g, &witness.apply(&pw)));
        assert_eq!(min_mismatch(&g, &pw).unwrap(), 0);
    }

    #[test]
    fn unfixable_element() {
        let g = f("(exists y (R x y))");
        let pw = one_unknown(vec![true, true]);
        assert!(ec_valid_world(&g, &pw).unwrap().is_none());
        assert_eq!(min_mismatch(&g, &pw).unwrap(), 1);
    }

    #[test]
    fn self_loop_is_the_input() {
        let mut w = World::empty(1);
        w.set_target(vec![true]);
        let mut pw = PartialWorld::from(&w);
        pw.set_truth(GroundAtom::Binary(BinaryPred::R, 0, 0), Truth::Unknown);
        let gc = ground(&f("(R x x)"), &pw);
        assert_eq!(gc.num_vars(), 1);
        assert_eq!(gc.circuit.gate(gc.root), &Gate::Input(0));
    }

    #[test]
    fn fully_known_folds_to_constant() {
        let mut w = World::empty(3);
        w.set_atom("P(a1)".parse().unwrap(), true);
        w.set_target(vec![false, true, false]);
        let pw = PartialWorld::from(&w);
        assert_eq!(ground(&f("(P x)"), &pw).as_const(), Some(true));
        assert_eq!(ground(&f("(Q x)"), &pw).as_const(), Some(false));
        assert_eq!(min_mismatch(&f("(not (P x))"), &pw).unwrap(), 3);
    }

    #[test]
    fn variable_count_matches_mask() {
        let mut w = World::empty(6);
        w.set_target(vec![false; 6]);
        let pw = crate::world::mask_unknowns(&w, 0.2, &[BinaryPred::R, BinaryPred::S], 9);
        let gc = ground(&f("(exists y (and (R x y) (S y x)))"), &pw);
        assert_eq!(gc.num_vars(), crate::world::masked_count(0.2, 72));
    }

    #[test]
    fn folding_rules() {
        let mut c = Circuit::new();
        let a = c.input(0);
        let na = c.not(a);
        assert_eq!(c.not(na), a);
        assert_eq!(c.and(vec![a, na]), FALSE);
        assert_eq!(c.or(vec![a, na]), TRUE);
        assert_eq!(c.and(vec![a, TRUE, a]), a);
        let b = c.input(1);
        let ab = c.and(vec![a, b]);
        assert_eq!(c.and(vec![b, a]), ab);
    }

    #[test]
    fn dimacs_names_inputs() {
        let pw = one_unknown(vec![true, false]);
        let text = ground(&f("(exists y (R x y))"), &pw).to_dimacs();
        assert!(text.starts_with("c unknown atoms: 1=R(a0,a1)\n"));
        assert!(text.contains("p cnf"));
    }
}

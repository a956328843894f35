use std::fmt::Write as _;

use crate::fol::{BinaryPred, UnaryPred};
use crate::instance::{ProblemInstance, Role, Task, WorldRecord};
use crate::world::GroundAtom;

const FULLOBS_OVERVIEW: &str = r#"# First-Order Logic Concept Synthesis

## Task Overview

You are given several finite "worlds," each containing:
- A finite domain of objects (named a0, a1, a2, ...)
- Interpretations of predicates (which objects/pairs satisfy each predicate)
- A target concept T(x) that specifies which objects are "positive" (T is TRUE)
  and which are "negative" (T is FALSE)

**Closed World Assumption**: Only the facts explicitly listed as TRUE are true.
Any predicate application (P(a), R(a,b), etc.) not explicitly listed should be
assumed FALSE.

**Your goal**: Find a first-order logic formula phi(x) with one free variable x
that **perfectly separates** the positive and negative examples:
- phi(c) must evaluate to TRUE for every object c where T(c) is TRUE
- phi(c) must evaluate to FALSE for every object c where T(c) is FALSE

The formula must work correctly for ALL objects in ALL training worlds.
"#;

const CI_OVERVIEW: &str = r#"# First-Order Logic Concept Synthesis (Zendo-Style)

## Task Overview

You are given two sets of finite "worlds":
- **YES worlds**: Worlds where the hidden rule is satisfied
- **NO worlds**: Worlds where the hidden rule is NOT satisfied

Each world contains:
- A finite domain of objects (named a0, a1, a2, ...)
- Interpretations of predicates (which objects/pairs satisfy each predicate)
- A target concept T(x) that labels certain objects as "positive examples"

**Closed World Assumption**: Only the facts explicitly listed as TRUE are true.

Your goal is to find a first-order logic formula phi(x) with one free variable x
such that:
- In YES worlds: phi(x) **exactly matches** T(x) for all objects
- In NO worlds: phi(x) **fails to match** T(x) -- at least one object is misclassified

Think of this like the game Zendo: you must find the secret rule that all YES
worlds follow but NO worlds violate.

## Validity Criterion (Important)

Define **Match(W, phi)** := for all a in domain(W): W |= phi(a) iff a in T_true(W)

Your formula is **correct** iff:
1. For every YES world W: Match(W, phi) is TRUE
2. For every NO world W: Match(W, phi) is FALSE

This means your formula must work perfectly in YES worlds, and must have at least
one error in each NO world.
"#;

const EC_OVERVIEW: &str = r#"# First-Order Logic Concept Synthesis (Partial Observation)

## Task Overview

You are given several finite "worlds" with **partial observations**:
- Some predicate facts are **known** (observed as TRUE or FALSE)
- Some predicate facts are **unknown** (not observed)

Each world contains:
- A finite domain of objects (named a0, a1, a2, ...)
- Known facts: predicates whose truth values have been observed
- Unknown atoms: predicates whose truth values are hidden
- A target concept T(x) that specifies which objects are "positive" (T is TRUE)
  and which are "negative" (T is FALSE)

**Observation Rules**:
- Atoms listed under "Known Facts" with explicit TRUE values are TRUE
- Atoms listed under "Unknown Atoms" have unknown truth values
- Any atom NOT listed as TRUE and NOT listed as Unknown is FALSE

The target T(x) values are always fully specified (not unknown).

**Your goal**: Find a first-order logic formula phi(x) with one free variable x
that **perfectly separates** the positive and negative examples:
- phi(c) must be TRUE for every object c where T(c) is TRUE
- phi(c) must be FALSE for every object c where T(c) is FALSE

**Completion semantics**: For each world separately, there must exist at least one
assignment of truth values to the unknown atoms such that phi matches T for all
objects in that world.
"#;

const OUTPUT_FORMAT: &str = r#"## Output Format

You must output your formula in S-expression syntax. The grammar is:

phi ::= (P x)             -- unary predicate applied to variable
      | (R x y)           -- binary predicate applied to two variables
      | (= x y)           -- equality of two variables
      | (not phi)         -- negation
      | (and phi1 phi2)   -- conjunction (2 or more arguments)
      | (or phi1 phi2)    -- disjunction (2 or more arguments)
      | (forall v phi)    -- universal quantification
      | (exists v phi)    -- existential quantification

**Important constraints:**
- Your formula must have exactly one free variable: x
- All other variables must be bound by quantifiers (forall or exists)
- Variable names should be: x (free), y, z, w (bound by quantifiers)
- Prefer simpler formulas; avoid redundant conjuncts and case-splitting
"#;

const FULLOBS_TASK: &str = r#"## Your Task

Analyze the training worlds carefully. Identify what **distinguishes** objects
where T is TRUE from objects where T is FALSE.

**Think step by step:**
1. For each training world, compare the T-TRUE objects against the T-FALSE objects
2. Look for properties (unary predicates P, Q) or relationships (binary predicates
   R, S) that correlate with T
3. Check: Do all T-TRUE objects share some property? Do all T-FALSE objects lack it?
4. Consider whether the pattern involves existential quantification
   ("there exists a y such that...") or universal quantification ("for all y...")
5. Formulate your hypothesis as an S-expression formula
6. Verify: For each object in each training world, check that your formula gives
   TRUE exactly when T is TRUE
"#;

const CI_TASK: &str = r#"## Your Task

Analyze the YES and NO worlds carefully. Find the pattern that:
1. Perfectly matches T in all YES worlds
2. Fails to match T in all NO worlds
"#;

const EC_TASK: &str = r#"## Your Task
Analyze the training worlds carefully, keeping in mind that some facts are unknown.

**Think step by step:**
1. For each training world, compare objects where T is TRUE vs. T is FALSE
2. Note which predicate facts are known vs unknown
3. Look for patterns that **distinguish** T-TRUE objects from T-FALSE objects
   using the known facts
4. Consider whether the pattern involves existential or universal quantification
5. Formulate your hypothesis as an S-expression formula
6. Verify: Check that your formula gives TRUE exactly when T is TRUE, and FALSE
   exactly when T is FALSE (under some valid completion of unknowns)

**Key insight**: Your formula should work based on the known facts. Focus on
patterns that depend on observed predicates.
"#;

const OUTPUT: &str = r#"## Output

Your final answer must be exactly ONE LINE containing ONLY valid JSON:
- "formula": a single S-expression formula string with one free variable x
- "description": a short plain-English description (one sentence)

Example:
{"formula":"(exists y (and (R x y) (P y)))","description":"x has an R-successor that satisfies P."}
"#;

/// Items per rendered line in long fact lists.
const PER_LINE: usize = 8;

fn element_list(items: &[usize]) -> String {
    items.iter().map(|a| format!("a{a}")).collect::<Vec<_>>().join(", ")
}

fn wrapped(label: &str, items: Vec<String>) -> String {
    if items.is_empty() {
        return format!("- {label}: (none)\n");
    }
    let indent = " ".repeat(label.len() + 4);
    let lines: Vec<String> = items.chunks(PER_LINE).map(|c| c.join(", ")).collect();
    format!("- {label}: {}\n", lines.join(&format!(", \n{indent}")))
}

fn pairs(edges: &[(usize, usize)]) -> Vec<String> {
    edges.iter().map(|(a, b)| format!("(a{a}, a{b})")).collect()
}

fn atom_text(atom: &GroundAtom) -> String {
    match *atom {
        GroundAtom::Unary(p, a) => format!("{}(a{a})", p.name()),
        GroundAtom::Binary(p, a, b) => format!("{}(a{a}, a{b})", p.name()),
    }
}

fn render_world(out: &mut String, name: &str, w: &WorldRecord, partial: bool) {
    let _ = writeln!(out, "### World: {name}");
    let domain: Vec<usize> = (0..w.domain_size).collect();
    let _ = writeln!(out, "Domain: {{{}}}", element_list(&domain));
    out.push('\n');
    out.push_str(if partial { "**Known Facts (TRUE):**\n" } else { "**Predicates:**\n" });
    let unary = |p: UnaryPred| if p == UnaryPred::P { &w.p } else { &w.q };
    for p in [UnaryPred::P, UnaryPred::Q] {
        let items = unary(p).iter().map(|a| format!("a{a}")).collect();
        out.push_str(&wrapped(p.name(), items));
    }
    for p in [BinaryPred::R, BinaryPred::S] {
        let edges = if p == BinaryPred::R { &w.r } else { &w.s };
        out.push_str(&wrapped(p.name(), pairs(edges)));
    }
    if partial {
        out.push_str("\n**Unknown Atoms:**\n");
        out.push_str(&wrapped("Unknown", w.unknown.iter().map(atom_text).collect()));
    }
    let target = w.target();
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..w.domain_size).partition(|&a| target[a]);
    out.push_str("\n**Target T(x):**\n");
    let _ = writeln!(out, "- T is TRUE for: {{{}}}", element_list(&pos));
    let _ = writeln!(out, "- T is FALSE for: {{{}}}", element_list(&neg));
    out.push('\n');
}

/// The full prompt for an instance. Output is a pure function of the instance.
pub fn render_prompt(instance: &ProblemInstance) -> String {
    let (overview, task) = match instance.task {
        Task::FullObs => (FULLOBS_OVERVIEW, FULLOBS_TASK),
        Task::Ci => (CI_OVERVIEW, CI_TASK),
        Task::Ec => (EC_OVERVIEW, EC_TASK),
    };
    let mut out = String::new();
    out.push_str(overview);
    out.push('\n');
    out.push_str(OUTPUT_FORMAT);
    out.push_str("\n\n## Problem Instance\n\n");
    match instance.task {
        Task::Ci => {
            for (role, heading, prefix) in [
                (Role::Yes, "## YES Worlds (the rule is satisfied):", "yes"),
                (Role::No, "## NO Worlds (the rule is violated):", "no"),
            ] {
                let _ = writeln!(out, "{heading}\n\n");
                for (i, w) in instance.worlds.iter().filter(|w| w.role == role).enumerate() {
                    render_world(&mut out, &format!("{prefix}_{i}"), w, false);
                }
            }
        }
        _ => {
            out.push_str("## Training Worlds (learn from these):\n\n\n");
            let partial = instance.task == Task::Ec;
            for (i, w) in instance.worlds.iter().enumerate() {
                render_world(&mut out, &format!("train_{i}"), w, partial);
            }
        }
    }
    out.push('\n');
    out.push_str(task);
    out.push('\n');
    out.push_str(OUTPUT);
    out
}

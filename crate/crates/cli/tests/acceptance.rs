//! Acceptance suite. Prints one PASS/FAIL line per criterion; run with
//! `cargo test -p induct-cli --test acceptance -- --nocapture` to see them.

use std::collections::HashMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use induct_core::completion::{ec_valid_all, ec_valid_world, min_mismatch};
use induct_core::evaluation::{
    evaluate_prediction, EvalRecord, Prediction, Summary, BLOAT_THRESHOLD, MAX_BUDGET,
};
use induct_core::fol::{parse, random_formula, BinaryPred, Formula, FormulaShape};
use induct_core::generators::filters::{filter_atomic, filter_quantifier_free, filter_subformula};
use induct_core::generators::{gen_holdout, BandConfig, Generator, HoldoutSpec};
use induct_core::instance::{ProblemInstance, Role, Task};
use induct_core::pool::mutate;
use induct_core::rng;
use induct_core::sat::Budget;
use induct_core::semantics::{error_profile, extension, matches, solves_ci, solves_fullobs};
use induct_core::world::{mask_unknowns, GroundAtom, PartialWorld, World};
use rand::Rng;

const BIN: &str = env!("CARGO_BIN_EXE_induct");

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Criterion 1 -----------------------------------------------------------------

fn ast_anchors() -> Outcome {
    let anchors = [
        ("(and (and (not (P x)) (not (Q x))) (exists y (and (R x y) (and (P y) (not (Q y))))))", 20),
        ("(and (not (or (P x) (Q x))) (exists y (S x y)))", 12),
        ("(and (not (P x)) (exists y (and (R x y) (and (P y) (not (Q y))))))", 16),
        ("(and (not (P x)) (exists y (R x y)))", 9),
        ("(forall y (or (not (S x y)) (exists z (and (R y z) (Q z)))))", 15),
    ];
    for (text, want) in anchors {
        let got = parse(text).map_err(|e| e.to_string())?.ast_size();
        check(got == want, || format!("{text}: {got} != {want}"))?;
    }
    Ok("5/5 anchors exact".into())
}

// Criterion 2 -----------------------------------------------------------------

/// Evaluates the printed text of a formula under an environment, without
/// using the library's AST or checker.
fn text_holds(tokens: &[&str], pos: &mut usize, w: &World, env: &mut HashMap<String, usize>) -> bool {
    assert_eq!(tokens[*pos], "(");
    let head = tokens[*pos + 1];
    *pos += 2;
    let result = match head {
        "not" => !text_holds(tokens, pos, w, env),
        "and" | "or" => {
            let mut vals = Vec::new();
            while tokens[*pos] == "(" {
                vals.push(text_holds(tokens, pos, w, env));
            }
            if head == "and" {
                vals.iter().all(|v| *v)
            } else {
                vals.iter().any(|v| *v)
            }
        }
        "forall" | "exists" => {
            let var = tokens[*pos].to_string();
            *pos += 1;
            let start = *pos;
            let saved = env.get(&var).copied();
            let mut vals = Vec::new();
            for a in 0..w.size() {
                env.insert(var.clone(), a);
                *pos = start;
                vals.push(text_holds(tokens, pos, w, env));
            }
            match saved {
                Some(v) => env.insert(var, v),
                None => env.remove(&var),
            };
            if head == "forall" {
                vals.iter().all(|v| *v)
            } else {
                vals.iter().any(|v| *v)
            }
        }
        _ => {
            let mut args = Vec::new();
            while tokens[*pos] != ")" {
                args.push(env[tokens[*pos]]);
                *pos += 1;
            }
            let atom_text = match args.as_slice() {
                [a] => format!("{head}(a{a})"),
                [a, b] if head == "=" => return { *pos += 1; a == b },
                [a, b] => format!("{head}(a{a},a{b})"),
                _ => panic!("bad arity"),
            };
            w.atom(atom_text.parse::<GroundAtom>().expect("atom text"))
        }
    };
    assert_eq!(tokens[*pos], ")");
    *pos += 1;
    result
}

fn semantics_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng::rng(11);
    let shape = FormulaShape { max_qd: 2, max_depth: 5, equality: true };
    for case in 0..1000 {
        let f = random_formula(&mut r, &shape);
        let n = r.gen_range(1..=4);
        let mut w = World::empty(n);
        for atom in w.all_atoms() {
            w.set_atom(atom, r.gen_bool(0.4));
        }
        let spaced = f.to_string().replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let ext = extension(&f, &w);
        for a in 0..n {
            let mut env = HashMap::from([("x".to_string(), a)]);
            let mut pos = 0;
            let want = text_holds(&tokens, &mut pos, &w, &mut env);
            check(ext.contains(a) == want, || format!("case {case}: {f} at a{a}"))?;
        }
    }
    Ok(format!("1000/1000 agree ({:.2?})", start.elapsed()))
}

// Criterion 3 -----------------------------------------------------------------

fn completion_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng::rng(12);
    let shape = FormulaShape { max_qd: 2, max_depth: 4, equality: false };
    let mut valid = 0;
    for case in 0..200 {
        let f = random_formula(&mut r, &shape);
        let n = r.gen_range(2..=4);
        let mut w = World::empty(n);
        for atom in w.all_atoms() {
            w.set_atom(atom, r.gen_bool(0.4));
        }
        if r.gen_bool(0.5) {
            w.set_target(extension(&f, &w).into_flags());
        } else {
            w.set_target((0..n).map(|_| r.gen_bool(0.5)).collect());
        }
        let rate = r.gen_range(0.0..(16.0 / (2 * n * n) as f64).min(0.99));
        let pw: PartialWorld = mask_unknowns(&w, rate, &[BinaryPred::R, BinaryPred::S], r.gen());
        let unknown = pw.unknown_atoms();
        check(unknown.len() <= 16, || format!("case {case}: {} unknowns", unknown.len()))?;
        let best = (0u32..1 << unknown.len())
            .map(|mask| {
                let full = pw.complete(|atom| {
                    let i = unknown.iter().position(|a| *a == atom).unwrap();
                    mask >> i & 1 == 1
                });
                error_profile(&f, &full).mismatches()
            })
            .min()
            .unwrap();
        let witness = ec_valid_world(&f, &pw).map_err(|e| e.to_string())?;
        check(witness.is_some() == (best == 0), || format!("case {case}: verdict differs for {f}"))?;
        if let Some(wit) = witness {
            valid += 1;
            check(matches(&f, &wit.apply(&pw)), || format!("case {case}: witness fails re-check"))?;
        }
        let mm = min_mismatch(&f, &pw).map_err(|e| e.to_string())?;
        check(mm == best, || format!("case {case}: min_mismatch {mm} != {best}"))?;
    }
    Ok(format!("200/200 agree, {valid} valid with re-verified witnesses ({:.2?})", start.elapsed()))
}

// Criterion 4 -----------------------------------------------------------------

fn invariant_violation(band: &BandConfig, inst: &ProblemInstance) -> Option<String> {
    let gold = &inst.gold_formula;
    let id = &inst.instance_id;
    match inst.task {
        Task::FullObs => {
            let worlds = inst.worlds_with(Role::Train);
            if !solves_fullobs(gold, &worlds) {
                return Some(format!("{id}: gold does not solve"));
            }
            if filter_atomic(&worlds).is_some()
                || filter_subformula(gold, &worlds).is_some()
                || filter_quantifier_free(&worlds).is_some()
            {
                return Some(format!("{id}: a rejection filter fires"));
            }
            if inst.diagnostics.kill_counts.iter().any(|&k| k == 0) {
                return Some(format!("{id}: world without a kill"));
            }
        }
        Task::Ci => {
            let yes = inst.worlds_with(Role::Yes);
            let no = inst.worlds_with(Role::No);
            if !solves_ci(gold, &yes, &no) {
                return Some(format!("{id}: gold does not solve"));
            }
            let traps = &inst.diagnostics.traps;
            let near = traps.iter().filter(|t| t.near_miss).count();
            if !(2..=4).contains(&traps.len()) || !(1..=2).contains(&near) {
                return Some(format!("{id}: survivors {} (near {near})", traps.len()));
            }
            for w in &no {
                if !traps.iter().any(|t| matches(&t.formula, w)) {
                    return Some(format!("{id}: NO world not matched by a trap"));
                }
            }
            if traps.iter().any(|t| !yes.iter().all(|w| matches(&t.formula, w))) {
                return Some(format!("{id}: recorded trap fails a YES world"));
            }
        }
        Task::Ec => {
            let partials = inst.partial_worlds();
            if !ec_valid_all(gold, &partials, Budget::default()).unwrap_or(false) {
                return Some(format!("{id}: gold not EC-valid"));
            }
            let relevance = band.relevance.expect("EC bands set a relevance mode");
            for pw in &partials {
                let lo = matches(gold, &pw.complete_uniform(false));
                let hi = matches(gold, &pw.complete_uniform(true));
                if !relevance.accepts(lo, hi) {
                    return Some(format!("{id}: relevance mode violated"));
                }
            }
        }
    }
    None
}

fn generator_invariants(g: &Generator, corpora: &mut Vec<(BandConfig, Vec<ProblemInstance>)>) -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    let mut lines = Vec::new();
    for band in BandConfig::builtin_bands() {
        let (instances, manifest) = g
            .generate_batch(&band, 20, 2025)
            .map_err(|e| format!("{} {}: {e}", band.task, band.name))?;
        for inst in &instances {
            if let Some(v) = invariant_violation(&band, inst) {
                return Err(v);
            }
        }
        total += instances.len();
        lines.push(format!("{}/{}:{}+{}r", band.task, band.name, instances.len(), manifest.replacements.len()));
        corpora.push((band, instances));
    }
    Ok(format!("{total}/{total} instances hold [{}] ({:.1?})", lines.join(" "), start.elapsed()))
}

// Criterion 5 -----------------------------------------------------------------

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn induct(args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("induct {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism(tmp: &Path) -> Outcome {
    let mut files = 0;
    for (task, band) in [("fullobs", "easy"), ("ci", "lift_mix"), ("ec", "hard")] {
        let a = tmp.join(format!("det_a_{band}"));
        let b = tmp.join(format!("det_b_{band}"));
        for dir in [&a, &b] {
            induct(&["generate", "--task", task, "--band", band, "--count", "6", "--seed", "77", "--out", dir.to_str().unwrap()])?;
        }
        let (ta, tb) = (tree(&a), tree(&b));
        check(!ta.is_empty() && ta == tb, || format!("{task}/{band}: output trees differ"))?;
        files += ta.len();
    }
    Ok(format!("{files} files byte-identical across runs"))
}

// Criterion 6 -----------------------------------------------------------------

fn curve_properties(s: &Summary) -> Result<(), String> {
    check(s.curve.len() == MAX_BUDGET as usize + 1, || "curve length".into())?;
    check(s.curve.windows(2).all(|p| p[0].1 <= p[1].1), || "curve not monotone".into())?;
    check(s.bloated + s.within(BLOAT_THRESHOLD) == s.valid, || {
        format!("bloated {} + within {} != valid {}", s.bloated, s.within(BLOAT_THRESHOLD), s.valid)
    })
}

fn budget_curves(corpora: &[(BandConfig, Vec<ProblemInstance>)], extra: &[EvalRecord]) -> Outcome {
    let mut evaluations = 1;
    curve_properties(&Summary::from_records(extra))?;
    // Mixed predictions on every generated band: gold, padded gold, mutants,
    // traps and garbage.
    let pad = parse("(or (P x) (not (P x)))").unwrap();
    let mut r = rng::rng(6);
    for (_, instances) in corpora {
        let mut records = Vec::new();
        for inst in instances {
            let mut candidates: Vec<Option<Formula>> = vec![Some(inst.gold_formula.clone()), None];
            let mut padded = vec![inst.gold_formula.clone()];
            padded.extend(std::iter::repeat_n(pad.clone(), r.gen_range(1..12)));
            candidates.push(Some(Formula::and(padded)));
            candidates.extend(mutate(&inst.gold_formula).into_iter().take(3).map(Some));
            candidates.extend(inst.diagnostics.traps.iter().map(|t| Some(t.formula.clone())));
            for c in candidates {
                let p = match c {
                    Some(f) => Prediction::from_formula(&inst.instance_id, "mix", f),
                    None => Prediction::missing(&inst.instance_id, "mix"),
                };
                records.push(evaluate_prediction(inst, &p, Budget::default()));
            }
        }
        curve_properties(&Summary::from_records(&records))?;
        evaluations += 1;
    }
    Ok(format!("{evaluations} evaluations: monotone, bloat + acc@25 == validity"))
}

// Criterion 7 -----------------------------------------------------------------

fn baseline_end_to_end(tmp: &Path, records_out: &mut Vec<EvalRecord>) -> Outcome {
    let start = Instant::now();
    let inst = tmp.join("e2e_inst");
    let pred = tmp.join("e2e_pred.jsonl");
    let eval = tmp.join("e2e_eval.jsonl");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    induct(&["generate", "--task", "fullobs", "--band", "simple", "--count", "30", "--seed", "7", "--out", &p(&inst)])?;
    induct(&["solve", "--in", &p(&inst), "--baseline", "--out", &p(&pred)])?;
    induct(&["evaluate", "--instances", &p(&inst), "--predictions", &p(&pred), "--out", &p(&eval)])?;
    induct(&["report", "--eval", &p(&eval), "--format", "table", "--out", &p(&tmp.join("e2e_report.txt"))])?;
    let records: Vec<EvalRecord> = fs::read_to_string(&eval)
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    check(records.len() == 30, || format!("{} records", records.len()))?;
    let s = Summary::from_records(&records);
    let msg = format!("validity {:.1}%, acc@0 {:.1}% ({:.1?})", 100.0 * s.acc_all, 100.0 * s.acc_at(0), start.elapsed());
    records_out.extend(records);
    check(s.acc_all >= 0.95 && s.acc_at(0) >= 0.90, || msg.clone())?;
    Ok(msg)
}

// Criterion 8 -----------------------------------------------------------------

fn holdout_property(corpora: &[(BandConfig, Vec<ProblemInstance>)]) -> Outcome {
    let spec = HoldoutSpec::default();
    let (mut gold_checked, mut ci_total, mut ci_separated) = (0, 0, 0);
    for (band, instances) in corpora {
        for inst in instances {
            let hold = gen_holdout(inst, band, &spec, rng::derive_str(99, &inst.instance_id))
                .map_err(|e| format!("{}: {e}", inst.instance_id))?;
            match inst.task {
                Task::FullObs | Task::Ec => {
                    check(hold.len() == 5, || format!("{}: {} holdout worlds", inst.instance_id, hold.len()))?;
                    let exact = hold.iter().all(|w| matches(&inst.gold_formula, &w.world()));
                    check(exact, || format!("{}: gold misses a holdout world", inst.instance_id))?;
                    gold_checked += 1;
                }
                Task::Ci => {
                    ci_total += 1;
                    let score = |f: &Formula| {
                        hold.iter()
                            .filter(|w| matches(f, &w.world()) == (w.role == Role::Yes))
                            .count() as f64
                            / hold.len() as f64
                    };
                    check(score(&inst.gold_formula) == 1.0, || format!("{}: gold misses CI holdout", inst.instance_id))?;
                    if inst.diagnostics.traps.iter().any(|t| score(&t.formula) < 1.0) {
                        ci_separated += 1;
                    }
                }
            }
        }
    }
    let share = ci_separated as f64 / ci_total.max(1) as f64;
    let msg = format!(
        "gold exact on {gold_checked}/{gold_checked} FullObs/EC instances; trap separated on {ci_separated}/{ci_total} CI instances ({:.0}%)",
        100.0 * share
    );
    check(share >= 0.80, || msg.clone())?;
    Ok(msg)
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match &outcome {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(detail) => println!("FAIL {name}: {detail}"),
    }
    outcome.is_ok()
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Generator::default();
    let mut corpora = Vec::new();
    let mut e2e = Vec::new();
    let results = [
        run("criterion 1 (AST anchors)", ast_anchors),
        run("criterion 2 (semantics oracle)", semantics_oracle),
        run("criterion 3 (completion oracle)", completion_oracle),
        run("criterion 4 (generator invariants)", || generator_invariants(&g, &mut corpora)),
        run("criterion 5 (determinism)", || determinism(tmp.path())),
        run("criterion 7 (baseline end to end)", || baseline_end_to_end(tmp.path(), &mut e2e)),
        run("criterion 6 (budget curves)", || budget_curves(&corpora, &e2e)),
        run("criterion 8 (holdout)", || holdout_property(&corpora)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}

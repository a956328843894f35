use induct_core::completion::{ec_valid_world, ground, min_mismatch};
use induct_core::fol::{random_formula, BinaryPred, FormulaShape};
use induct_core::rng;
use induct_core::semantics::{error_profile, matches};
use induct_core::world::{mask_unknowns, sample_world, PartialWorld, SamplingParams, World};
use rand::Rng;

/// Every completion's mismatch count, by direct enumeration.
fn enumerate(f: &induct_core::fol::Formula, pw: &PartialWorld) -> Vec<usize> {
    let unknown = pw.unknown_atoms();
    assert!(unknown.len() <= 16);
    (0u32..(1 << unknown.len()))
        .map(|mask| {
            let w: World = pw.complete(|atom| {
                let i = unknown.iter().position(|a| *a == atom).unwrap();
                mask >> i & 1 == 1
            });
            error_profile(f, &w).mismatches()
        })
        .collect()
}

fn random_case(seed: u64) -> (induct_core::fol::Formula, PartialWorld) {
    let mut r = rng::rng(seed);
    let shape = FormulaShape {
        max_qd: 2,
        max_depth: 4,
        equality: r.gen_bool(0.2),
    };
    let gold = random_formula(&mut r, &shape);
    let size = r.gen_range(2..=4);
    let params = SamplingParams {
        domain: (size, size),
        balance: (0.0, 1.0),
        out_degree: r.gen_range(0..size),
        ..SamplingParams::default()
    };
    let mut w = sample_world(&params, &gold, r.gen()).unwrap();
    if r.gen_bool(0.5) {
        // Unrelated target, so that invalid cases are common.
        w.set_target((0..size).map(|_| r.gen_bool(0.5)).collect());
    }
    let grid = 2 * size * size;
    let max_rate = (16.0 / grid as f64).min(0.99);
    let rate = r.gen_range(0.0..max_rate);
    let pw = mask_unknowns(&w, rate, &[BinaryPred::R, BinaryPred::S], r.gen());
    let probe = random_formula(&mut r, &shape);
    (if r.gen_bool(0.5) { gold } else { probe }, pw)
}

#[test]
fn verdicts_and_minimum_agree_with_enumeration() {
    let mut valid = 0;
    for seed in 0..300 {
        let (f, pw) = random_case(seed);
        let all = enumerate(&f, &pw);
        let best = *all.iter().min().unwrap();
        let witness = ec_valid_world(&f, &pw).unwrap();
        assert_eq!(witness.is_some(), best == 0, "seed {seed}: {f}");
        if let Some(w) = witness {
            valid += 1;
            assert!(matches(&f, &w.apply(&pw)), "seed {seed}: witness does not re-verify");
        }
        assert_eq!(min_mismatch(&f, &pw).unwrap(), best, "seed {seed}: {f}");
        assert!(best <= pw.size());
    }
    assert!(valid > 20 && valid < 280, "degenerate sample: {valid} valid");
}

#[test]
fn grounded_circuit_evaluates_like_the_checker() {
    for seed in 500..600 {
        let (f, pw) = random_case(seed);
        let gc = ground(&f, &pw);
        assert_eq!(gc.num_vars(), pw.unknown_atoms().len());
        let mut r = rng::rng(seed);
        for _ in 0..8 {
            let assignment: Vec<bool> = (0..gc.num_vars()).map(|_| r.gen_bool(0.5)).collect();
            let w = pw.complete(|atom| assignment[gc.inputs.iter().position(|a| *a == atom).unwrap()]);
            assert_eq!(gc.eval(&assignment), matches(&f, &w));
            assert_eq!(gc.mismatches(&assignment), error_profile(&f, &w).mismatches());
        }
    }
}

#[test]
fn gold_is_valid_on_its_own_masked_world() {
    for seed in 0..100 {
        let mut r = rng::rng(1000 + seed);
        let gold = random_formula(&mut r, &FormulaShape::default());
        let params = SamplingParams {
            domain: (6, 8),
            balance: (0.0, 1.0),
            ..SamplingParams::default()
        };
        let w = sample_world(&params, &gold, r.gen()).unwrap();
        let pw = mask_unknowns(&w, 0.2, &[BinaryPred::R, BinaryPred::S], r.gen());
        assert!(ec_valid_world(&gold, &pw).unwrap().is_some());
    }
}

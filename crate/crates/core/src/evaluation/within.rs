use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};
use thiserror::Error;

use super::metrics::NEAR_GOLD_THRESHOLD;
use super::EvalRecord;
use crate::rng;

pub const BOOTSTRAP_RESAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("within-problem analysis needs at least 2 qualifying instances, found {found}")]
pub struct InsufficientData {
    pub found: usize,
}

/// Paired holdout comparison across instances; `delta = first - second`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n: usize,
    pub first_rate: f64,
    pub second_rate: f64,
    pub mean_delta: f64,
    /// 95% percentile-bootstrap interval of the mean delta.
    pub ci: (f64, f64),
    pub frac_positive: f64,
    pub frac_negative: f64,
    /// One-sided sign test of "first generalizes better".
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinProblem {
    pub seed: u64,
    pub resamples: usize,
    pub short_long: Comparison,
    /// Present when at least two instances have both kinds.
    pub near_above: Option<Comparison>,
}

/// Percentile bootstrap interval of the mean, resampling values with replacement.
pub fn bootstrap_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    if values.is_empty() || resamples == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut r = rng::rng(seed);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[r.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

/// P(X >= positive) for X ~ Binomial(positive + negative, 1/2); ties are dropped.
pub fn sign_test(positive: usize, negative: usize) -> f64 {
    let n = (positive + negative) as u64;
    if n == 0 || positive == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).expect("valid binomial parameters");
    b.sf(positive as u64 - 1)
}

fn compare(pairs: &[(f64, f64)], seed: u64) -> Comparison {
    let n = pairs.len();
    let deltas: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let pos = deltas.iter().filter(|d| **d > 0.0).count();
    let neg = deltas.iter().filter(|d| **d < 0.0).count();
    let avg = |xs: &mut dyn Iterator<Item = f64>| xs.sum::<f64>() / n as f64;
    Comparison {
        n,
        first_rate: avg(&mut pairs.iter().map(|p| p.0)),
        second_rate: avg(&mut pairs.iter().map(|p| p.1)),
        mean_delta: avg(&mut deltas.iter().copied()),
        ci: bootstrap_ci(&deltas, BOOTSTRAP_RESAMPLES, 0.95, seed),
        frac_positive: pos as f64 / n as f64,
        frac_negative: neg as f64 / n as f64,
        p_value: sign_test(pos, neg),
    }
}

/// Compares, within each instance, the holdout rates of the shortest and
/// longest train-correct predictions (and of near-gold vs above-gold ones).
/// Exact gold matches are excluded before grouping.
pub fn within_problem_analysis(records: &[EvalRecord], seed: u64) -> Result<WithinProblem, InsufficientData> {
    let mut by_instance: BTreeMap<&str, Vec<(&EvalRecord, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.valid && !r.exact_gold) {
        if let Some(h) = r.holdout.as_ref().and_then(|h| h.headline()) {
            by_instance.entry(&r.instance_id).or_default().push((r, h));
        }
    }
    let key = |r: &EvalRecord| (r.ast_pred, r.formula.as_ref().map(|f| f.to_string()));
    let mut short_long = Vec::new();
    let mut near_above = Vec::new();
    for preds in by_instance.values().filter(|p| p.len() >= 2) {
        let short = preds.iter().min_by_key(|(r, _)| key(r)).expect("non-empty");
        let long = preds.iter().max_by_key(|(r, _)| key(r)).expect("non-empty");
        short_long.push((short.1, long.1));
        let (near, above): (Vec<_>, Vec<_>) = preds
            .iter()
            .partition(|(r, _)| r.delta.is_some_and(|d| d <= NEAR_GOLD_THRESHOLD));
        if !near.is_empty() && !above.is_empty() {
            let m = |v: &[&(&EvalRecord, f64)]| v.iter().map(|p| p.1).sum::<f64>() / v.len() as f64;
            near_above.push((m(&near), m(&above)));
        }
    }
    if short_long.len() < 2 {
        return Err(InsufficientData { found: short_long.len() });
    }
    Ok(WithinProblem {
        seed,
        resamples: BOOTSTRAP_RESAMPLES,
        short_long: compare(&short_long, seed),
        near_above: (near_above.len() >= 2).then(|| compare(&near_above, rng::derive(seed, 1))),
    })
}

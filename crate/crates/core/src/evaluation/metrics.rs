use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalRecord, FailureMode, Status};
use crate::instance::{Role, Task};

/// Valid predictions more than this many symbols above the gold are bloated.
pub const BLOAT_THRESHOLD: i64 = 25;
/// Near-gold predictions are at most this many symbols above the gold.
pub const NEAR_GOLD_THRESHOLD: i64 = 1;
/// Largest budget on the reported accuracy curve.
pub const MAX_BUDGET: i64 = 100;

/// Inclusive delta ranges for holdout-by-complexity bins.
pub const DELTA_BINS: [(i64, i64); 7] = [
    (i64::MIN, 0),
    (1, 1),
    (2, 5),
    (6, 10),
    (11, 25),
    (26, 50),
    (51, i64::MAX),
];

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Headline numbers over a set of records. Every rate uses all records as
/// its denominator, so missing outputs count as incorrect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub parsed: usize,
    pub valid: usize,
    pub bloated: usize,
    pub coverage: f64,
    pub acc_all: f64,
    pub bloat_rate: f64,
    /// Bloated share of valid outputs.
    pub bloat_share_of_valid: f64,
    /// `(budget, acc_at(budget))` for budgets 0..=100.
    pub curve: Vec<(i64, f64)>,
    #[serde(skip)]
    valid_deltas: Vec<i64>,
}

impl Summary {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> Self {
        let mut n = 0;
        let mut parsed = 0;
        let mut valid_deltas = Vec::new();
        for r in records {
            n += 1;
            if r.status == Status::Ok {
                parsed += 1;
            }
            if r.valid {
                valid_deltas.push(r.delta.expect("valid records carry a formula"));
            }
        }
        valid_deltas.sort_unstable();
        let bloated = valid_deltas.iter().filter(|&&d| d > BLOAT_THRESHOLD).count();
        let valid = valid_deltas.len();
        let mut s = Summary {
            n,
            parsed,
            valid,
            bloated,
            coverage: ratio(parsed, n),
            acc_all: ratio(valid, n),
            bloat_rate: ratio(bloated, n),
            bloat_share_of_valid: ratio(bloated, valid),
            curve: Vec::new(),
            valid_deltas,
        };
        s.curve = (0..=MAX_BUDGET).map(|d| (d, s.acc_at(d))).collect();
        s
    }

    /// Valid predictions within `budget` symbols of the gold.
    pub fn within(&self, budget: i64) -> usize {
        self.valid_deltas.partition_point(|&d| d <= budget)
    }

    pub fn acc_at(&self, budget: i64) -> f64 {
        ratio(self.within(budget), self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub overall: Summary,
    pub by_model: BTreeMap<String, Summary>,
    /// Model, then `task/band`.
    pub by_band: BTreeMap<String, BTreeMap<String, Summary>>,
    /// Model, then family tag.
    pub by_family: BTreeMap<String, BTreeMap<String, Summary>>,
}

fn grouped<'a>(
    records: &'a [EvalRecord],
    key: impl Fn(&EvalRecord) -> String,
) -> BTreeMap<String, Vec<&'a EvalRecord>> {
    let mut out: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        out.entry(key(r)).or_default().push(r);
    }
    out
}

fn nested(
    records: &[EvalRecord],
    key: impl Fn(&EvalRecord) -> String,
) -> BTreeMap<String, BTreeMap<String, Summary>> {
    grouped(records, |r| r.model.clone())
        .into_iter()
        .map(|(m, rs)| {
            let mut inner: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
            for r in rs {
                inner.entry(key(r)).or_default().push(r);
            }
            let inner = inner
                .into_iter()
                .map(|(k, v)| (k, Summary::from_records(v)))
                .collect();
            (m, inner)
        })
        .collect()
}

pub fn aggregate(records: &[EvalRecord]) -> Report {
    Report {
        overall: Summary::from_records(records),
        by_model: grouped(records, |r| r.model.clone())
            .into_iter()
            .map(|(k, v)| (k, Summary::from_records(v)))
            .collect(),
        by_band: nested(records, |r| format!("{}/{}", r.task, r.band)),
        by_family: nested(records, |r| r.family.tag().to_string()),
    }
}

/// CI outcome shares. The categories partition the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiDecomposition {
    pub n: usize,
    pub correct: f64,
    pub yes_fail: f64,
    pub no_fail: f64,
    pub parse: f64,
    pub missing: f64,
    pub mean_yes_worlds: f64,
    pub mean_no_worlds: f64,
    /// `(yes_fail / mean_yes_worlds) / (no_fail / mean_no_worlds)`: failure
    /// shares normalized by world counts; 1.0 means failures are
    /// proportional to the number of worlds of each kind.
    pub normalized_ratio: Option<f64>,
}

/// Decomposes the CI records among `records`.
pub fn ci_failure_decomposition(records: &[EvalRecord]) -> CiDecomposition {
    let ci: Vec<&EvalRecord> = records.iter().filter(|r| r.task == Task::Ci).collect();
    let n = ci.len();
    let count = |pred: &dyn Fn(&EvalRecord) -> bool| ci.iter().filter(|r| pred(r)).count();
    let correct = count(&|r| r.valid);
    let yes_fail = count(&|r| matches!(r.failure, Some(FailureMode::YesFail { .. })));
    let no_fail = count(&|r| matches!(r.failure, Some(FailureMode::NoFail { .. })));
    let parse = count(&|r| r.status == Status::ParseError);
    let missing = count(&|r| r.status == Status::Missing);
    debug_assert_eq!(correct + yes_fail + no_fail + parse + missing, n);
    let mean_yes = mean(ci.iter().map(|r| r.yes_worlds as f64)).unwrap_or(0.0);
    let mean_no = mean(ci.iter().map(|r| r.no_worlds as f64)).unwrap_or(0.0);
    let normalized_ratio = (no_fail > 0 && mean_yes > 0.0 && mean_no > 0.0)
        .then(|| (yes_fail as f64 / mean_yes) / (no_fail as f64 / mean_no));
    CiDecomposition {
        n,
        correct: ratio(correct, n),
        yes_fail: ratio(yes_fail, n),
        no_fail: ratio(no_fail, n),
        parse: ratio(parse, n),
        missing: ratio(missing, n),
        mean_yes_worlds: mean_yes,
        mean_no_worlds: mean_no,
        normalized_ratio,
    }
}

fn train_correct_with_holdout(records: &[EvalRecord]) -> impl Iterator<Item = (&EvalRecord, f64)> {
    records
        .iter()
        .filter(|r| r.valid)
        .filter_map(|r| Some((r, r.holdout.as_ref()?.headline()?)))
}

/// Holdout generalization of valid predictions, split at the near-gold threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSplit {
    pub valid: usize,
    pub near: usize,
    pub above: usize,
    pub near_rate: Option<f64>,
    pub above_rate: Option<f64>,
    pub gap: Option<f64>,
}

pub fn holdout_split(records: &[EvalRecord]) -> HoldoutSplit {
    let (near, above): (Vec<_>, Vec<_>) = train_correct_with_holdout(records)
        .partition(|(r, _)| r.delta.is_some_and(|d| d <= NEAR_GOLD_THRESHOLD));
    let near_rate = mean(near.iter().map(|(_, h)| *h));
    let above_rate = mean(above.iter().map(|(_, h)| *h));
    HoldoutSplit {
        valid: near.len() + above.len(),
        near: near.len(),
        above: above.len(),
        near_rate,
        above_rate,
        gap: near_rate.zip(above_rate).map(|(a, b)| a - b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaBin {
    pub lo: i64,
    pub hi: i64,
    pub n: usize,
    pub rate: Option<f64>,
}

impl DeltaBin {
    pub fn label(&self) -> String {
        match (self.lo, self.hi) {
            (i64::MIN, hi) => format!("<=+{hi}"),
            (lo, i64::MAX) => format!(">=+{lo}"),
            (lo, hi) if lo == hi => format!("+{lo}"),
            (lo, hi) => format!("+{lo}..+{hi}"),
        }
    }
}

/// Mean holdout rate of train-correct predictions per delta bin.
pub fn bin_by_delta(records: &[EvalRecord]) -> Vec<DeltaBin> {
    let scored: Vec<(i64, f64)> = train_correct_with_holdout(records)
        .map(|(r, h)| (r.delta.expect("valid"), h))
        .collect();
    DELTA_BINS
        .iter()
        .map(|&(lo, hi)| {
            let inside: Vec<f64> = scored
                .iter()
                .filter(|(d, _)| (lo..=hi).contains(d))
                .map(|(_, h)| *h)
                .collect();
            DeltaBin {
                lo,
                hi,
                n: inside.len(),
                rate: mean(inside),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcBestCompletion {
    pub total: usize,
    pub valid: usize,
    /// Invalid formula-bearing predictions with a computed minimum.
    pub scored: usize,
    pub resource_limited: usize,
    pub mean_min_mismatch: Option<f64>,
    pub share_1_2: Option<f64>,
    pub share_3_plus: Option<f64>,
}

/// Summed per-world minimum mismatch of invalid EC predictions.
pub fn ec_best_completion_report(records: &[EvalRecord]) -> EcBestCompletion {
    let ec: Vec<&EvalRecord> = records.iter().filter(|r| r.task == Task::Ec).collect();
    let totals: Vec<usize> = ec
        .iter()
        .filter_map(|r| match &r.failure {
            Some(FailureMode::Completion { min_mismatch }) => Some(min_mismatch.iter().sum()),
            _ => None,
        })
        .collect();
    let scored = totals.len();
    let share = |pred: &dyn Fn(usize) -> bool| {
        (scored > 0).then(|| ratio(totals.iter().filter(|&&t| pred(t)).count(), scored))
    };
    EcBestCompletion {
        total: ec.len(),
        valid: ec.iter().filter(|r| r.valid).count(),
        scored,
        resource_limited: ec
            .iter()
            .filter(|r| r.failure == Some(FailureMode::ResourceLimit))
            .count(),
        mean_min_mismatch: mean(totals.iter().map(|&t| t as f64)),
        share_1_2: share(&|t| (1..=2).contains(&t)),
        share_3_plus: share(&|t| t >= 3),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityUsage {
    /// Responses returned (not missing).
    pub returned: usize,
    pub using: usize,
    pub share: f64,
    pub mean_ast: Option<f64>,
    pub valid_rate: Option<f64>,
}

pub fn equality_usage(records: &[EvalRecord]) -> EqualityUsage {
    let returned = records.iter().filter(|r| r.status != Status::Missing).count();
    let users: Vec<&EvalRecord> = records.iter().filter(|r| r.uses_equality).collect();
    EqualityUsage {
        returned,
        using: users.len(),
        share: ratio(users.len(), returned),
        mean_ast: mean(users.iter().filter_map(|r| r.ast_pred).map(|a| a as f64)),
        valid_rate: (!users.is_empty()).then(|| ratio(users.iter().filter(|r| r.valid).count(), users.len())),
    }
}

/// Mean per-world error rates on training worlds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfileSummary {
    pub fullobs_fp: Option<f64>,
    pub fullobs_fn: Option<f64>,
    pub ci_yes_fp: Option<f64>,
    pub ci_yes_fn: Option<f64>,
    /// Mean mismatched elements on CI NO worlds.
    pub no_margin: Option<f64>,
}

pub fn error_profile_report(records: &[EvalRecord]) -> ErrorProfileSummary {
    let worlds = |task: Task, role: Role| {
        records
            .iter()
            .filter(move |r| r.task == task)
            .flat_map(|r| r.world_scores.iter())
            .filter(move |s| s.role == role)
    };
    let rate = |task, role, pick: fn(&super::WorldScore) -> usize| {
        mean(worlds(task, role).map(|s| ratio(pick(s), s.size)))
    };
    ErrorProfileSummary {
        fullobs_fp: rate(Task::FullObs, Role::Train, |s| s.false_positives),
        fullobs_fn: rate(Task::FullObs, Role::Train, |s| s.false_negatives),
        ci_yes_fp: rate(Task::Ci, Role::Yes, |s| s.false_positives),
        ci_yes_fn: rate(Task::Ci, Role::Yes, |s| s.false_negatives),
        no_margin: mean(worlds(Task::Ci, Role::No).map(|s| s.mismatches() as f64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{HoldoutScore, WorldScore};
    use crate::fol::Family;

    pub(crate) fn record(valid: bool, delta: Option<i64>) -> EvalRecord {
        EvalRecord {
            instance_id: "i".into(),
            model: "m".into(),
            task: Task::FullObs,
            band: "simple".into(),
            family: Family::A,
            lift_hard: false,
            status: if delta.is_some() { Status::Ok } else { Status::Missing },
            formula: None,
            valid,
            ast_gold: 10,
            ast_pred: delta.map(|d| (10 + d) as usize),
            delta,
            exact_gold: false,
            uses_equality: false,
            failure: None,
            yes_worlds: 0,
            no_worlds: 0,
            world_scores: Vec::new(),
            holdout: None,
        }
    }

    #[test]
    fn all_gold_predictions() {
        let recs = vec![record(true, Some(0)); 4];
        let s = Summary::from_records(&recs);
        assert_eq!((s.coverage, s.acc_all, s.acc_at(0), s.bloat_rate), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn one_bloated_valid_of_two() {
        let recs = vec![record(true, Some(30)), record(false, None)];
        let s = Summary::from_records(&recs);
        assert_eq!(s.acc_all, 0.5);
        assert_eq!(s.acc_at(25), 0.0);
        assert_eq!(s.bloat_rate, 0.5);
        assert_eq!(s.coverage, 0.5);
        assert_eq!(s.curve.len(), 101);
        assert_eq!(s.curve[30], (30, 0.5));
    }

    #[test]
    fn ci_categories_partition() {
        let mut recs = Vec::new();
        for (valid, failure, status) in [
            (true, None, Status::Ok),
            (false, Some(FailureMode::YesFail { worlds: vec![0] }), Status::Ok),
            (false, Some(FailureMode::YesFail { worlds: vec![1] }), Status::Ok),
            (false, Some(FailureMode::NoFail { worlds: vec![8] }), Status::Ok),
            (false, None, Status::ParseError),
            (false, None, Status::Missing),
        ] {
            let mut r = record(valid, Some(0));
            r.task = Task::Ci;
            r.failure = failure;
            r.status = status;
            r.yes_worlds = 8;
            r.no_worlds = 2;
            recs.push(r);
        }
        let d = ci_failure_decomposition(&recs);
        assert_eq!(d.n, 6);
        let total = d.correct + d.yes_fail + d.no_fail + d.parse + d.missing;
        assert!((total - 1.0).abs() < 1e-12);
        assert!((d.yes_fail - 2.0 / 6.0).abs() < 1e-12);
        // Two YES failures over 8 worlds vs one NO failure over 2 worlds.
        assert!((d.normalized_ratio.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn holdout_split_and_bins() {
        let mut recs = Vec::new();
        for (delta, hits) in [(0, 5), (1, 4), (3, 1), (40, 0)] {
            let mut r = record(true, Some(delta));
            r.holdout = Some(HoldoutScore {
                correct: (0..5).map(|i| i < hits).collect(),
                roles: vec![Role::Train; 5],
            });
            recs.push(r);
        }
        let split = holdout_split(&recs);
        assert_eq!((split.near, split.above), (2, 2));
        assert!((split.near_rate.unwrap() - 0.9).abs() < 1e-12);
        assert!((split.above_rate.unwrap() - 0.1).abs() < 1e-12);
        let bins = bin_by_delta(&recs);
        assert_eq!(bins.iter().map(|b| b.n).sum::<usize>(), 4);
        assert_eq!(bins[0].label(), "<=+0");
        assert_eq!(bins[2].rate, Some(0.2));
        assert_eq!(bins[5].rate, Some(0.0));
        assert_eq!(bins[6].rate, None);
    }

    #[test]
    fn ec_buckets() {
        let mut recs = Vec::new();
        for mm in [vec![0, 1, 0], vec![2, 3], vec![0, 0]] {
            let mut r = record(false, Some(0));
            r.task = Task::Ec;
            r.failure = Some(FailureMode::Completion { min_mismatch: mm });
            recs.push(r);
        }
        let mut ok = record(true, Some(0));
        ok.task = Task::Ec;
        recs.push(ok);
        let rep = ec_best_completion_report(&recs);
        assert_eq!((rep.total, rep.valid, rep.scored), (4, 1, 3));
        assert!((rep.mean_min_mismatch.unwrap() - 2.0).abs() < 1e-12);
        assert!((rep.share_1_2.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((rep.share_3_plus.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn equality_shares() {
        let none = equality_usage(&[record(true, Some(0)), record(false, Some(2))]);
        assert_eq!((none.using, none.share, none.valid_rate), (0, 0.0, None));
        let mut eq = record(true, Some(5));
        eq.uses_equality = true;
        let u = equality_usage(&[eq, record(false, Some(1))]);
        assert_eq!(u.share, 0.5);
        assert_eq!(u.valid_rate, Some(1.0));
        assert_eq!(u.mean_ast, Some(15.0));
    }

    #[test]
    fn error_profiles() {
        let mut r = record(false, Some(0));
        r.world_scores = vec![
            WorldScore { role: Role::Train, size: 4, false_positives: 4, false_negatives: 0 },
            WorldScore { role: Role::Train, size: 5, false_positives: 5, false_negatives: 0 },
        ];
        let p = error_profile_report(&[r]);
        assert_eq!(p.fullobs_fp, Some(1.0));
        assert_eq!(p.fullobs_fn, Some(0.0));
        assert_eq!(p.no_margin, None);
    }
}

//! Scoring of predictions against instances, and the analyses built on the
//! resulting records.

mod metrics;
mod report;
mod within;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::completion::{ec_valid_world_with, min_mismatch_with, CompletionError};
use crate::fol::{Family, Formula};
use crate::instance::{ProblemInstance, Role, Task};
use crate::sat::Budget;
use crate::semantics::{error_profile, matches};

pub use metrics::{
    aggregate, bin_by_delta, ci_failure_decomposition, ec_best_completion_report, equality_usage,
    error_profile_report, holdout_split, CiDecomposition, DeltaBin, EcBestCompletion, EqualityUsage,
    ErrorProfileSummary, HoldoutSplit, Report, Summary, BLOAT_THRESHOLD, DELTA_BINS, MAX_BUDGET,
    NEAR_GOLD_THRESHOLD,
};
pub use report::{build_report, render_tables, FullReport};
pub use within::{
    bootstrap_ci, sign_test, within_problem_analysis, Comparison, InsufficientData, WithinProblem,
    BOOTSTRAP_RESAMPLES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ParseError,
    /// No response artifact at all.
    Missing,
}

/// One solver answer for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub raw_text: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<Formula>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

impl Prediction {
    pub fn missing(instance_id: &str, model: &str) -> Self {
        Prediction {
            instance_id: instance_id.to_string(),
            model: model.to_string(),
            raw_text: String::new(),
            status: Status::Missing,
            formula: None,
            description: String::new(),
        }
    }

    pub fn from_formula(instance_id: &str, model: &str, formula: Formula) -> Self {
        Prediction {
            instance_id: instance_id.to_string(),
            model: model.to_string(),
            raw_text: formula.to_string(),
            status: Status::Ok,
            formula: Some(formula),
            description: String::new(),
        }
    }

    /// Formula present exactly when the status is `Ok`.
    pub fn is_consistent(&self) -> bool {
        self.formula.is_some() == (self.status == Status::Ok)
    }
}

/// Why a formula-bearing prediction failed its task criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureMode {
    /// FullObs: indices of training worlds not exactly matched.
    Mismatch { worlds: Vec<usize> },
    /// CI: some YES world is not exactly matched.
    YesFail { worlds: Vec<usize> },
    /// CI: every YES world matched, some NO world matched exactly.
    NoFail { worlds: Vec<usize> },
    /// EC: per-world minimum mismatch over completions.
    Completion { min_mismatch: Vec<usize> },
    /// The completion check ran out of budget.
    ResourceLimit,
}

/// Per-world error counts of a prediction on the training worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldScore {
    pub role: Role,
    pub size: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl WorldScore {
    pub fn mismatches(&self) -> usize {
        self.false_positives + self.false_negatives
    }
}

/// Held-out exact-match results. For CI, YES worlds count as correct when
/// matched and NO worlds when not matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutScore {
    pub correct: Vec<bool>,
    pub roles: Vec<Role>,
}

impl HoldoutScore {
    fn rate_over(&self, keep: impl Fn(Role) -> bool) -> Option<f64> {
        let picked: Vec<bool> = self
            .correct
            .iter()
            .zip(&self.roles)
            .filter(|(_, r)| keep(**r))
            .map(|(c, _)| *c)
            .collect();
        (!picked.is_empty()).then(|| picked.iter().filter(|c| **c).count() as f64 / picked.len() as f64)
    }

    /// Correct fraction over all held-out worlds.
    pub fn rate(&self) -> Option<f64> {
        self.rate_over(|_| true)
    }

    /// Headline generalization rate: all worlds for FullObs/EC, YES worlds
    /// only for CI.
    pub fn headline(&self) -> Option<f64> {
        if self.roles.iter().any(|r| *r == Role::Yes) {
            self.rate_over(|r| r == Role::Yes)
        } else {
            self.rate()
        }
    }

    pub fn no_rate(&self) -> Option<f64> {
        self.rate_over(|r| r == Role::No)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub model: String,
    pub task: Task,
    pub band: String,
    pub family: Family,
    pub lift_hard: bool,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<Formula>,
    pub valid: bool,
    pub ast_gold: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ast_pred: Option<usize>,
    /// `ast_pred - ast_gold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<i64>,
    /// Prediction is syntactically the gold formula.
    pub exact_gold: bool,
    pub uses_equality: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureMode>,
    pub yes_worlds: usize,
    pub no_worlds: usize,
    /// Per training world; empty for EC and for predictions without a formula.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub world_scores: Vec<WorldScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout: Option<HoldoutScore>,
}

impl EvalRecord {
    /// Valid and within `budget` AST symbols of the gold.
    pub fn within_budget(&self, budget: i64) -> bool {
        self.valid && self.delta.is_some_and(|d| d <= budget)
    }

    pub fn is_bloated(&self) -> bool {
        self.valid && self.delta.is_some_and(|d| d > BLOAT_THRESHOLD)
    }
}

fn holdout_score(instance: &ProblemInstance, f: &Formula) -> Option<HoldoutScore> {
    if instance.holdout.is_empty() {
        return None;
    }
    let (correct, roles) = instance
        .holdout
        .iter()
        .map(|rec| {
            let m = matches(f, &rec.world());
            let ok = if rec.role == Role::No { !m } else { m };
            (ok, rec.role)
        })
        .unzip();
    Some(HoldoutScore { correct, roles })
}

/// Held-out exact-match flags of a formula on an instance's holdout worlds.
pub fn holdout_generalization(instance: &ProblemInstance, f: &Formula) -> Option<HoldoutScore> {
    holdout_score(instance, f)
}

/// Scores one prediction. Every failure path is recorded in the result.
pub fn evaluate_prediction(instance: &ProblemInstance, p: &Prediction, budget: Budget) -> EvalRecord {
    if p.instance_id != instance.instance_id {
        warn!(prediction = %p.instance_id, instance = %instance.instance_id, "scoring prediction against a different instance");
    }
    let count = |role| instance.worlds.iter().filter(|w| w.role == role).count();
    let mut rec = EvalRecord {
        instance_id: instance.instance_id.clone(),
        model: p.model.clone(),
        task: instance.task,
        band: instance.band.clone(),
        family: instance.family,
        lift_hard: instance.lift_hard,
        status: p.status,
        formula: None,
        valid: false,
        ast_gold: instance.gold_ast,
        ast_pred: None,
        delta: None,
        exact_gold: false,
        uses_equality: false,
        failure: None,
        yes_worlds: count(Role::Yes),
        no_worlds: count(Role::No),
        world_scores: Vec::new(),
        holdout: None,
    };
    let Some(f) = p.formula.as_ref().filter(|_| p.status == Status::Ok) else {
        return rec;
    };
    let ast = f.ast_size();
    rec.formula = Some(f.clone());
    rec.ast_pred = Some(ast);
    rec.delta = Some(ast as i64 - instance.gold_ast as i64);
    rec.exact_gold = *f == instance.gold_formula;
    rec.uses_equality = f.uses_equality();
    rec.holdout = holdout_score(instance, f);

    match instance.task {
        Task::FullObs | Task::Ci => {
            rec.world_scores = instance
                .worlds
                .iter()
                .map(|w| {
                    let e = error_profile(f, &w.world());
                    WorldScore {
                        role: w.role,
                        size: w.domain_size,
                        false_positives: e.false_positives,
                        false_negatives: e.false_negatives,
                    }
                })
                .collect();
            let failing = |pred: &dyn Fn(&WorldScore) -> bool| -> Vec<usize> {
                rec.world_scores
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| pred(s))
                    .map(|(i, _)| i)
                    .collect()
            };
            let unmatched_pos = failing(&|s| s.role != Role::No && s.mismatches() > 0);
            let matched_no = failing(&|s| s.role == Role::No && s.mismatches() == 0);
            rec.failure = match (instance.task, unmatched_pos.is_empty(), matched_no.is_empty()) {
                (_, true, true) => None,
                (Task::FullObs, false, _) => Some(FailureMode::Mismatch { worlds: unmatched_pos }),
                (_, false, _) => Some(FailureMode::YesFail { worlds: unmatched_pos }),
                (_, true, false) => Some(FailureMode::NoFail { worlds: matched_no }),
            };
            rec.valid = rec.failure.is_none();
        }
        Task::Ec => match ec_check(f, instance, budget) {
            Ok(None) => rec.valid = true,
            Ok(Some(mm)) => rec.failure = Some(FailureMode::Completion { min_mismatch: mm }),
            Err(e) => {
                warn!(id = %instance.instance_id, %e, "completion check exhausted its budget");
                rec.failure = Some(FailureMode::ResourceLimit);
            }
        },
    }
    rec
}

/// `None` when every world has a matching completion, else per-world
/// minimum mismatches.
fn ec_check(f: &Formula, instance: &ProblemInstance, budget: Budget) -> Result<Option<Vec<usize>>, CompletionError> {
    let worlds = instance.partial_worlds();
    let mut valid = true;
    for pw in &worlds {
        if ec_valid_world_with(f, pw, budget)?.is_none() {
            valid = false;
            break;
        }
    }
    if valid {
        return Ok(None);
    }
    let mm = worlds
        .iter()
        .map(|pw| min_mismatch_with(f, pw, budget))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(mm))
}

/// Scores every prediction whose instance is known, in parallel. Instances
/// without a prediction for a model are scored as missing for that model.
pub fn evaluate_all(instances: &[ProblemInstance], predictions: &[Prediction], budget: Budget) -> Vec<EvalRecord> {
    use std::collections::{BTreeMap, BTreeSet};
    let by_id: BTreeMap<&str, &ProblemInstance> = instances.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let models: BTreeSet<&str> = predictions.iter().map(|p| p.model.as_str()).collect();
    let mut jobs: Vec<(&ProblemInstance, Prediction)> = Vec::new();
    for p in predictions {
        match by_id.get(p.instance_id.as_str()) {
            Some(inst) => jobs.push((inst, p.clone())),
            None => warn!(id = %p.instance_id, "prediction for unknown instance ignored"),
        }
    }
    let seen: BTreeSet<(&str, &str)> = predictions
        .iter()
        .map(|p| (p.model.as_str(), p.instance_id.as_str()))
        .collect();
    for m in &models {
        for inst in instances {
            if !seen.contains(&(*m, inst.instance_id.as_str())) {
                jobs.push((inst, Prediction::missing(&inst.instance_id, m)));
            }
        }
    }
    let mut out: Vec<EvalRecord> = jobs
        .par_iter()
        .map(|(inst, p)| evaluate_prediction(inst, p, budget))
        .collect();
    out.sort_by(|a, b| (&a.model, &a.instance_id).cmp(&(&b.model, &b.instance_id)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{BandConfig, Generator};
    use crate::fol::parse;

    fn ci_instance() -> ProblemInstance {
        let g = Generator::default();
        let band = BandConfig::builtin(Task::Ci, "core").unwrap();
        let (mut insts, _) = g.generate_batch(&band, 1, 4).unwrap();
        insts.remove(0)
    }

    #[test]
    fn gold_is_valid_with_zero_delta() {
        let inst = ci_instance();
        let p = Prediction::from_formula(&inst.instance_id, "m", inst.gold_formula.clone());
        let rec = evaluate_prediction(&inst, &p, Budget::default());
        assert!(rec.valid && rec.exact_gold);
        assert_eq!(rec.delta, Some(0));
        assert_eq!(rec.failure, None);
    }

    #[test]
    fn missing_and_parse_errors_are_invalid() {
        let inst = ci_instance();
        let rec = evaluate_prediction(&inst, &Prediction::missing(&inst.instance_id, "m"), Budget::default());
        assert!(!rec.valid);
        assert_eq!(rec.status, Status::Missing);
        let mut p = Prediction::missing(&inst.instance_id, "m");
        p.status = Status::ParseError;
        p.raw_text = "no idea".into();
        assert!(!evaluate_prediction(&inst, &p, Budget::default()).valid);
    }

    #[test]
    fn trap_prediction_is_a_no_fail() {
        let inst = ci_instance();
        let trap = inst.diagnostics.traps[0].formula.clone();
        let rec = evaluate_prediction(&inst, &Prediction::from_formula(&inst.instance_id, "m", trap), Budget::default());
        assert!(!rec.valid);
        assert!(matches!(rec.failure, Some(FailureMode::NoFail { .. })));
    }

    #[test]
    fn heavily_bloated_valid_prediction() {
        let inst = ci_instance();
        // One `and` plus 59 six-symbol tautologies adds exactly 355 symbols.
        let taut = parse("(or (P x) (not (P x)))").unwrap();
        let mut parts = vec![inst.gold_formula.clone()];
        parts.extend(std::iter::repeat_n(taut, 59));
        let f = Formula::and(parts);
        let rec = evaluate_prediction(&inst, &Prediction::from_formula(&inst.instance_id, "m", f), Budget::default());
        assert!(rec.valid);
        assert_eq!(rec.delta, Some(355));
        assert!(!rec.within_budget(MAX_BUDGET));
        assert!(rec.is_bloated());
    }
}

//! Difficulty-controlled instance construction for the three tasks.

mod ci;
mod config;
mod ec;
pub mod filters;
mod fullobs;
mod holdout;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info, warn};

use crate::completion::CompletionError;
use crate::fol::Formula;
use crate::instance::{Diagnostics, ProblemInstance, Task, WorldRecord};
use crate::pool::{build_frozen_pool, builtin_templates, FrozenPool, Template};
use crate::rng;
use crate::world::WorldError;

pub use ci::{gen_ci, trap_pool, Trap};
pub use config::{bands_to_toml, parse_bands, BandConfig, Relevance};
pub use ec::gen_ec;
pub use fullobs::gen_fullobs;
pub use holdout::{gen_holdout, HoldoutSpec};

/// Seed of the frozen hypothesis pool shared by every band.
pub const FROZEN_POOL_SEED: u64 = 1500;

/// Rejection reasons counted while generating one instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts(pub BTreeMap<String, u32>);

impl FailureCounts {
    pub fn bump(&mut self, reason: &str) {
        *self.0.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }
}

impl fmt::Display for FailureCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("generation exhausted for {gold} after {attempts} attempts; failures {failures}")]
    GenerationExhausted {
        gold: String,
        attempts: u32,
        failures: FailureCounts,
    },
    #[error("insufficient gold pool for band {band}: needed {needed}, could place {available}")]
    InsufficientPool {
        band: String,
        needed: usize,
        available: usize,
    },
    #[error("band {band} belongs to task {expected}, not {found}")]
    WrongTask {
        band: String,
        expected: Task,
        found: Task,
    },
    #[error(transparent)]
    Sampling(#[from] WorldError),
    #[error(transparent)]
    Completion(#[from] CompletionError),
}

fn check_task(band: &BandConfig, task: Task) -> Result<(), GenError> {
    if band.task != task {
        return Err(GenError::WrongTask {
            band: band.name.clone(),
            expected: band.task,
            found: task,
        });
    }
    band.sampling().validate()?;
    Ok(())
}

fn assemble(
    band: &BandConfig,
    gold: &Template,
    id: &str,
    seed: u64,
    worlds: Vec<WorldRecord>,
    diagnostics: Diagnostics,
) -> ProblemInstance {
    ProblemInstance {
        task: band.task,
        band: band.name.clone(),
        instance_id: id.to_string(),
        seed,
        gold_formula: gold.formula.clone(),
        gold_ast: gold.ast,
        gold_qd: gold.qd,
        family: gold.family,
        lift_hard: gold.lift_hard,
        subfamily: gold.subfamily.clone(),
        worlds,
        holdout: Vec::new(),
        diagnostics,
    }
}

fn eligible<'a>(band: &BandConfig, templates: &'a [Template]) -> Vec<&'a Template> {
    templates
        .iter()
        .filter(|t| (band.qd.0..=band.qd.1).contains(&t.qd) && !t.formula.uses_equality())
        .filter(|t| match band.lift_fraction {
            Some(f) if f <= 0.0 => !t.lift_hard,
            Some(f) if f >= 1.0 => t.lift_hard,
            _ => true,
        })
        .collect()
}

/// Per-gold and per-subfamily usage counts under the band caps.
#[derive(Debug, Default)]
struct Usage {
    gold: HashMap<Formula, usize>,
    subfamily: HashMap<String, usize>,
}

impl Usage {
    fn admits(&self, t: &Template, band: &BandConfig) -> bool {
        self.gold.get(&t.formula).copied().unwrap_or(0) < band.per_gold_cap
            && self.subfamily.get(&t.subfamily).copied().unwrap_or(0) < band.per_subfamily_cap
    }

    fn add(&mut self, t: &Template) {
        *self.gold.entry(t.formula.clone()).or_insert(0) += 1;
        *self.subfamily.entry(t.subfamily.clone()).or_insert(0) += 1;
    }

    fn remove(&mut self, t: &Template) {
        if let Some(n) = self.gold.get_mut(&t.formula) {
            *n -= 1;
        }
        if let Some(n) = self.subfamily.get_mut(&t.subfamily) {
            *n -= 1;
        }
    }
}

/// Round-robin over a shuffled candidate list, so golds are spread as evenly
/// as the caps allow.
fn pick(
    band: &BandConfig,
    mut candidates: Vec<&Template>,
    n: usize,
    usage: &mut Usage,
    rng: &mut rng::Rng,
) -> Result<Vec<Template>, GenError> {
    candidates.shuffle(rng);
    let mut out = Vec::new();
    while out.len() < n {
        let before = out.len();
        for t in &candidates {
            if out.len() == n {
                break;
            }
            if usage.admits(t, band) {
                usage.add(t);
                out.push((*t).clone());
            }
        }
        if out.len() == before {
            return Err(GenError::InsufficientPool {
                band: band.name.clone(),
                needed: n,
                available: out.len(),
            });
        }
    }
    Ok(out)
}

/// Number of lift-hard golds a batch of `count` must contain, if constrained.
pub fn lift_quota(band: &BandConfig, count: usize) -> Option<usize> {
    band.lift_fraction
        .map(|f| ((f * count as f64).round() as usize).min(count))
}

/// Samples `count` golds for a band, honoring QD range, caps and the
/// lift-hard share, in a seeded order.
pub fn select_golds(
    band: &BandConfig,
    templates: &[Template],
    count: usize,
    seed: u64,
) -> Result<Vec<Template>, GenError> {
    let mut r = rng::rng(seed);
    let pool = eligible(band, templates);
    let mut usage = Usage::default();
    let mut out = match lift_quota(band, count) {
        None => pick(band, pool, count, &mut usage, &mut r)?,
        Some(n_lift) => {
            let (lift, non): (Vec<&Template>, Vec<&Template>) = pool.into_iter().partition(|t| t.lift_hard);
            let mut out = pick(band, lift, n_lift, &mut usage, &mut r)?;
            out.extend(pick(band, non, count - n_lift, &mut usage, &mut r)?);
            out
        }
    };
    out.shuffle(&mut r);
    Ok(out)
}

/// Templates plus the frozen pool: everything instance generation draws on.
#[derive(Debug, Clone)]
pub struct Generator {
    pub templates: Vec<Template>,
    pub pool: FrozenPool,
}

impl Default for Generator {
    fn default() -> Self {
        let templates = builtin_templates();
        let golds: Vec<Formula> = templates.iter().map(|t| t.formula.clone()).collect();
        let pool = build_frozen_pool(&golds, FROZEN_POOL_SEED);
        Generator { templates, pool }
    }
}

pub fn instance_id(band: &BandConfig, index: usize) -> String {
    format!("{}_{}_{:04}", band.task, band.name, index)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance_id: String,
    pub seed: u64,
    pub gold: Formula,
    pub family: crate::fol::Family,
    pub lift_hard: bool,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kill_counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub survivor_history: Vec<usize>,
}

/// A gold that failed to instantiate and was swapped out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub instance_id: String,
    pub failed_gold: Formula,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: Task,
    pub band: String,
    pub seed: u64,
    pub count: usize,
    pub pool_seed: u64,
    pub pool_size: usize,
    pub instances: Vec<ManifestEntry>,
    pub replacements: Vec<Replacement>,
}

impl Generator {
    pub fn generate(
        &self,
        band: &BandConfig,
        gold: &Template,
        id: &str,
        seed: u64,
    ) -> Result<ProblemInstance, GenError> {
        match band.task {
            Task::FullObs => gen_fullobs(&self.pool, gold, band, id, seed),
            Task::Ci => gen_ci(&self.pool, gold, band, id, seed),
            Task::Ec => gen_ec(gold, band, id, seed),
        }
    }

    /// Generates `count` instances of a band. Golds that cannot be
    /// instantiated are replaced by other eligible golds of the same
    /// lift-hard class; each replacement is recorded in the manifest.
    pub fn generate_batch(
        &self,
        band: &BandConfig,
        count: usize,
        seed: u64,
    ) -> Result<(Vec<ProblemInstance>, Manifest), GenError> {
        let golds = select_golds(band, &self.templates, count, rng::derive(seed, 0))?;
        let ids: Vec<String> = (0..count).map(|i| instance_id(band, i)).collect();
        info!(band = %band.name, task = %band.task, count, "generating batch");
        let first: Vec<Result<ProblemInstance, GenError>> = golds
            .par_iter()
            .zip(ids.par_iter())
            .map(|(g, id)| self.generate(band, g, id, rng::derive_str(seed, id)))
            .collect();

        let mut usage = Usage::default();
        for g in &golds {
            usage.add(g);
        }
        let mut spare: Vec<&Template> = eligible(band, &self.templates);
        spare.shuffle(&mut rng::rng(rng::derive(seed, 1)));
        let mut failed: BTreeSet<Formula> = BTreeSet::new();
        let mut instances = Vec::with_capacity(count);
        let mut replacements = Vec::new();
        for ((result, gold), id) in first.into_iter().zip(&golds).zip(&ids) {
            let mut result = result;
            let mut current = gold.clone();
            let mut tries = 1;
            loop {
                match result {
                    Ok(inst) => {
                        instances.push(inst);
                        break;
                    }
                    Err(GenError::GenerationExhausted { failures, .. }) => {
                        warn!(%id, gold = %current.formula, %failures, "replacing gold");
                        replacements.push(Replacement {
                            instance_id: id.clone(),
                            failed_gold: current.formula.clone(),
                            reason: failures.to_string(),
                        });
                        failed.insert(current.formula.clone());
                        usage.remove(&current);
                        let next = spare.iter().find(|t| {
                            t.lift_hard == gold.lift_hard
                                && !failed.contains(&t.formula)
                                && usage.admits(t, band)
                        });
                        let next = match next {
                            Some(t) if tries < band.gold_attempts => (*t).clone(),
                            _ => {
                                return Err(GenError::InsufficientPool {
                                    band: band.name.clone(),
                                    needed: count,
                                    available: instances.len(),
                                })
                            }
                        };
                        usage.add(&next);
                        tries += 1;
                        debug!(%id, gold = %next.formula, "retrying with replacement gold");
                        result = self.generate(band, &next, id, rng::derive_str(seed, id));
                        current = next;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        let entries = instances
            .iter()
            .map(|i| ManifestEntry {
                instance_id: i.instance_id.clone(),
                seed: i.seed,
                gold: i.gold_formula.clone(),
                family: i.family,
                lift_hard: i.lift_hard,
                attempts: i.diagnostics.attempts,
                kill_counts: i.diagnostics.kill_counts.clone(),
                survivor_history: i.diagnostics.survivor_history.clone(),
            })
            .collect();
        let manifest = Manifest {
            task: band.task,
            band: band.name.clone(),
            seed,
            count,
            pool_seed: self.pool.seed,
            pool_size: self.pool.len(),
            instances: entries,
            replacements,
        };
        Ok((instances, manifest))
    }
}

use tracing::debug;

use super::filters::{filter_atomic, filter_quantifier_free, filter_subformula};
use super::{assemble, check_task, BandConfig, FailureCounts, GenError};
use crate::fol::Formula;
use crate::instance::{Diagnostics, ProblemInstance, Role, Task, WorldRecord};
use crate::pool::{FrozenPool, Template};
use crate::rng;
use crate::semantics::matches;
use crate::world::{sample_world_with, SamplingParams, World, WorldError};

const RESERVE_PER_SLOT: usize = 2;

struct Accepted {
    worlds: Vec<World>,
    kills: Vec<usize>,
    survivors: Vec<usize>,
}

fn sample(params: &SamplingParams, gold: &Formula, r: &mut rng::Rng) -> Result<World, &'static str> {
    match sample_world_with(params, gold, r) {
        Ok(w) => Ok(w),
        Err(WorldError::SamplingExhausted { .. }) => Err("sampling"),
        Err(e) => panic!("band parameters were validated: {e}"),
    }
}

fn attempt(
    hypotheses: &[&Formula],
    gold: &Formula,
    band: &BandConfig,
    r: &mut rng::Rng,
) -> Result<Accepted, &'static str> {
    let params = band.sampling();
    let mut alive: Vec<&Formula> = hypotheses.to_vec();
    let mut acc = Accepted {
        worlds: Vec::with_capacity(band.worlds),
        kills: Vec::new(),
        survivors: Vec::new(),
    };
    for slot in 0..band.worlds {
        // Survivors to keep in hand so that later worlds still have
        // something to kill.
        let reserve = (band.worlds - slot - 1) * RESERVE_PER_SLOT;
        let mut candidates: Vec<(World, Vec<&Formula>)> = Vec::new();
        for _ in 0..band.world_retries {
            let w = sample(&params, gold, r)?;
            let keep: Vec<&Formula> = alive.iter().copied().filter(|h| matches(h, &w)).collect();
            if keep.len() == alive.len() {
                continue;
            }
            candidates.push((w, keep));
            if candidates.len() >= band.kill_candidates.max(1) {
                break;
            }
        }
        let pick = candidates
            .iter()
            .enumerate()
            .filter(|(_, (_, keep))| keep.len() >= reserve)
            .min_by_key(|(_, (_, keep))| keep.len())
            .or_else(|| candidates.iter().enumerate().max_by_key(|(_, (_, keep))| keep.len()))
            .map(|(i, _)| i);
        let best = pick.map(|i| candidates.swap_remove(i));
        let Some((w, keep)) = best else {
            return Err("no_kill");
        };
        acc.kills.push(alive.len() - keep.len());
        acc.survivors.push(keep.len());
        alive = keep;
        acc.worlds.push(w);
    }
    if filter_atomic(&acc.worlds).is_some() {
        return Err("atomic");
    }
    if filter_subformula(gold, &acc.worlds).is_some() {
        return Err("subformula");
    }
    if filter_quantifier_free(&acc.worlds).is_some() {
        return Err("quantifier_free");
    }
    Ok(acc)
}

/// Worlds from the band sampler labeled by the gold. Hypotheses matching all
/// of them are treated as gold-equivalent and left out of kill tracking.
fn reference_bank(band: &BandConfig, gold: &Formula, seed: u64) -> Result<Vec<World>, GenError> {
    let params = band.sampling();
    let mut r = rng::rng(rng::derive_str(seed, "reference-bank"));
    (0..band.equivalence_bank)
        .map(|_| sample_world_with(&params, gold, &mut r).map_err(GenError::from))
        .collect()
}

/// Builds a FullObs instance: `k` worlds labeled by the gold formula, each
/// eliminating at least one frozen-pool hypothesis that survived the worlds
/// before it, then screened by the atomic, subformula and quantifier-free
/// filters. Failing instances are resampled whole.
pub fn gen_fullobs(
    pool: &FrozenPool,
    gold: &Template,
    band: &BandConfig,
    id: &str,
    seed: u64,
) -> Result<ProblemInstance, GenError> {
    check_task(band, Task::FullObs)?;
    let bank = reference_bank(band, &gold.formula, seed)?;
    let hypotheses: Vec<&Formula> = pool
        .members()
        .map(|(_, f)| f)
        .filter(|f| bank.iter().any(|w| !matches(f, w)))
        .collect();
    let mut failures = FailureCounts::default();
    for n in 0..band.instance_retries {
        let mut r = rng::rng(rng::derive(seed, u64::from(n)));
        match attempt(&hypotheses, &gold.formula, band, &mut r) {
            Ok(acc) => {
                let worlds = acc
                    .worlds
                    .iter()
                    .map(|w| WorldRecord::from_world(Role::Train, w))
                    .collect();
                let diagnostics = Diagnostics {
                    kill_counts: acc.kills,
                    survivor_history: acc.survivors,
                    attempts: n + 1,
                    ..Diagnostics::default()
                };
                return Ok(assemble(band, gold, id, seed, worlds, diagnostics));
            }
            Err(reason) => {
                debug!(%id, reason, "fullobs attempt rejected");
                failures.bump(reason);
            }
        }
    }
    Err(GenError::GenerationExhausted {
        gold: gold.formula.to_string(),
        attempts: band.instance_retries,
        failures,
    })
}

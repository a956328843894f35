use std::collections::BTreeSet;

use rand::Rng as _;
use tracing::debug;

use super::{assemble, check_task, BandConfig, FailureCounts, GenError};
use crate::fol::Formula;
use crate::instance::{Diagnostics, ProblemInstance, Role, Task, TrapRecord, WorldRecord};
use crate::pool::{mutate, FrozenPool, Template};
use crate::rng;
use crate::semantics::{extension, matches};
use crate::world::{sample_world_with, SamplingParams, World, WorldError};

/// A plausible wrong answer tracked during contrastive generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trap {
    pub formula: Formula,
    /// Produced by mutating the gold formula (rather than a generic shortcut).
    pub near_miss: bool,
}

/// Per-problem trap pool: the gold's near-miss mutants followed by the
/// frozen pool's shortcut tier, without duplicates or the gold itself.
pub fn trap_pool(pool: &FrozenPool, gold: &Formula) -> Vec<Trap> {
    let mut seen = BTreeSet::new();
    seen.insert(gold.clone());
    let mut out = Vec::new();
    for m in mutate(gold) {
        if seen.insert(m.clone()) {
            out.push(Trap { formula: m, near_miss: true });
        }
    }
    for s in &pool.tier1 {
        if seen.insert(s.clone()) {
            out.push(Trap {
                formula: s.clone(),
                near_miss: false,
            });
        }
    }
    out
}

fn sample(params: &SamplingParams, gold: &Formula, r: &mut rng::Rng) -> Result<World, &'static str> {
    match sample_world_with(params, gold, r) {
        Ok(w) => Ok(w),
        Err(WorldError::SamplingExhausted { .. }) => Err("sampling"),
        Err(e) => panic!("band parameters were validated: {e}"),
    }
}

/// Samples a world whose target is `trap`'s extension and differs from the
/// gold's. `accept` gets the final world and may veto it.
pub(super) fn no_world(
    params: &SamplingParams,
    gold: &Formula,
    trap: &Formula,
    attempts: u32,
    r: &mut rng::Rng,
    mut accept: impl FnMut(&World) -> bool,
) -> Result<Option<World>, &'static str> {
    for _ in 0..attempts {
        let mut w = sample(params, gold, r)?;
        let target = extension(trap, &w).into_flags();
        if target.as_slice() == w.target() {
            continue;
        }
        w.set_target(target);
        if accept(&w) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

struct Accepted {
    yes: Vec<World>,
    no: Vec<World>,
    survivors: Vec<usize>,
    history: Vec<usize>,
}

fn attempt(traps: &[Trap], gold: &Formula, band: &BandConfig, r: &mut rng::Rng) -> Result<Accepted, &'static str> {
    let params = band.sampling();
    let n_yes = r.gen_range(band.yes_worlds.0..=band.yes_worlds.1);
    let n_no = r.gen_range(band.no_worlds.0..=band.no_worlds.1);
    let (near_lo, near_hi) = band.near_miss_band;
    let (total_lo, total_hi) = band.survivor_band;
    let near_count = |s: &[usize]| s.iter().filter(|&&i| traps[i].near_miss).count();

    let mut alive: Vec<usize> = (0..traps.len()).collect();
    let mut yes = Vec::with_capacity(n_yes);
    let mut history = Vec::with_capacity(n_yes);
    for i in 0..n_yes {
        let last = i + 1 == n_yes;
        let mut placed = false;
        for _ in 0..band.world_retries {
            let w = sample(&params, gold, r)?;
            let next: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&t| matches(&traps[t].formula, &w))
                .collect();
            let near = near_count(&next);
            if near < near_lo || next.len() < total_lo {
                continue;
            }
            let within = near <= near_hi && next.len() <= total_hi;
            // Above the band, a YES world has to make progress; the last
            // one has to land inside it.
            if (last && !within) || (!within && next.len() == alive.len()) {
                continue;
            }
            alive = next;
            history.push(alive.len());
            yes.push(w);
            placed = true;
            break;
        }
        if !placed {
            return Err("yes_band");
        }
    }

    let mut unkilled = alive.clone();
    let mut no = Vec::with_capacity(n_no);
    for j in 0..n_no {
        let slots_after = n_no - j - 1;
        let trap = *unkilled.first().unwrap_or(&alive[j % alive.len()]);
        let found = no_world(&params, gold, &traps[trap].formula, band.no_world_attempts, r, |w| {
            let left = unkilled
                .iter()
                .filter(|&&t| !matches(&traps[t].formula, w))
                .count();
            left <= slots_after
        })?;
        let Some(w) = found else {
            return Err("no_world");
        };
        unkilled.retain(|&t| !matches(&traps[t].formula, &w));
        no.push(w);
    }
    Ok(Accepted {
        yes,
        no,
        survivors: alive,
        history,
    })
}

/// Builds a CI instance. YES worlds are sampled one at a time while the
/// per-problem trap pool is filtered down to its survivors; the YES set is
/// accepted when the survivors fall inside the near-miss and total bands.
/// Each NO world is then labeled by a surviving trap's extension (and
/// differs from the gold's), until every survivor is exactly matched by
/// some NO world.
pub fn gen_ci(
    pool: &FrozenPool,
    gold: &Template,
    band: &BandConfig,
    id: &str,
    seed: u64,
) -> Result<ProblemInstance, GenError> {
    check_task(band, Task::Ci)?;
    let traps = trap_pool(pool, &gold.formula);
    let mut failures = FailureCounts::default();
    for n in 0..band.instance_retries {
        let mut r = rng::rng(rng::derive(seed, u64::from(n)));
        match attempt(&traps, &gold.formula, band, &mut r) {
            Ok(acc) => {
                let n_yes = acc.yes.len();
                let mut worlds: Vec<WorldRecord> = acc
                    .yes
                    .iter()
                    .map(|w| WorldRecord::from_world(Role::Yes, w))
                    .collect();
                worlds.extend(acc.no.iter().map(|w| WorldRecord::from_world(Role::No, w)));
                let trap_records = acc
                    .survivors
                    .iter()
                    .map(|&t| TrapRecord {
                        formula: traps[t].formula.clone(),
                        near_miss: traps[t].near_miss,
                        killed_by: acc
                            .no
                            .iter()
                            .enumerate()
                            .filter(|(_, w)| matches(&traps[t].formula, w))
                            .map(|(j, _)| n_yes + j)
                            .collect(),
                    })
                    .collect();
                let diagnostics = Diagnostics {
                    survivor_history: acc.history,
                    traps: trap_records,
                    attempts: n + 1,
                    ..Diagnostics::default()
                };
                return Ok(assemble(band, gold, id, seed, worlds, diagnostics));
            }
            Err(reason) => {
                debug!(%id, reason, "ci attempt rejected");
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

use super::{assemble, check_task, BandConfig, FailureCounts, GenError, Relevance};
use crate::instance::{Diagnostics, ProblemInstance, RelevanceRecord, Role, Task, WorldRecord};
use crate::pool::Template;
use crate::rng;
use crate::semantics::matches;
use crate::world::{mask_unknowns_with, sample_world_with, WorldError};

/// Builds an EC instance: per world, sample a gold-labeled world, mask a
/// fixed share of the eligible binary atoms, and keep it when the relevance
/// filter accepts the two extreme completions.
pub fn gen_ec(gold: &Template, band: &BandConfig, id: &str, seed: u64) -> Result<ProblemInstance, GenError> {
    check_task(band, Task::Ec)?;
    let params = band.sampling();
    let mode = band.relevance.unwrap_or(Relevance::ExtremeOr);
    let mut failures = FailureCounts::default();
    'attempts: for n in 0..band.instance_retries {
        let mut r = rng::rng(rng::derive(seed, u64::from(n)));
        let mut worlds = Vec::with_capacity(band.worlds);
        let mut relevance = Vec::with_capacity(band.worlds);
        for _ in 0..band.worlds {
            let mut placed = false;
            for _ in 0..band.world_retries {
                let w = match sample_world_with(&params, &gold.formula, &mut r) {
                    Ok(w) => w,
                    Err(WorldError::SamplingExhausted { .. }) => {
                        failures.bump("sampling");
                        continue 'attempts;
                    }
                    Err(e) => return Err(e.into()),
                };
                let pw = mask_unknowns_with(&w, band.unknown_rate, &band.unknown_preds, &mut r);
                let all_false = matches(&gold.formula, &pw.complete_uniform(false));
                let all_true = matches(&gold.formula, &pw.complete_uniform(true));
                if !mode.accepts(all_false, all_true) {
                    continue;
                }
                worlds.push(WorldRecord::from_masked(Role::Train, &pw, &w));
                relevance.push(RelevanceRecord { all_false, all_true });
                placed = true;
                break;
            }
            if !placed {
                failures.bump("relevance");
                continue 'attempts;
            }
        }
        let diagnostics = Diagnostics {
            relevance,
            attempts: n + 1,
            ..Diagnostics::default()
        };
        return Ok(assemble(band, gold, id, seed, worlds, diagnostics));
    }
    Err(GenError::GenerationExhausted {
        gold: gold.formula.to_string(),
        attempts: band.instance_retries,
        failures,
    })
}

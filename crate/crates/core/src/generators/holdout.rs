use serde::{Deserialize, Serialize};

use super::ci::no_world;
use super::{BandConfig, FailureCounts, GenError};
use crate::instance::{ProblemInstance, Role, Task, WorldRecord};
use crate::rng;
use crate::world::{sample_world_with, WorldError};

/// Sizes of a held-out world set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutSpec {
    /// Fresh gold-labeled worlds for FullObs and EC.
    pub worlds: usize,
    /// YES / NO worlds for CI.
    pub yes: usize,
    pub no: usize,
}

impl Default for HoldoutSpec {
    fn default() -> Self {
        HoldoutSpec {
            worlds: 5,
            yes: 3,
            no: 2,
        }
    }
}

/// Held-out worlds for an instance, from the band's sampler. FullObs and EC
/// get fresh fully observed worlds labeled by the gold; CI gets YES worlds
/// labeled by the gold plus NO worlds labeled by the recorded surviving
/// traps in turn.
pub fn gen_holdout(
    instance: &ProblemInstance,
    band: &BandConfig,
    spec: &HoldoutSpec,
    seed: u64,
) -> Result<Vec<WorldRecord>, GenError> {
    let params = band.sampling();
    params.validate()?;
    let gold = &instance.gold_formula;
    let traps = &instance.diagnostics.traps;
    let mut failures = FailureCounts::default();
    'attempts: for n in 0..band.instance_retries.max(1) {
        let mut r = rng::rng(rng::derive(seed, u64::from(n)));
        let mut out = Vec::new();
        let fresh = match instance.task {
            Task::Ci => spec.yes,
            _ => spec.worlds,
        };
        let role = match instance.task {
            Task::Ci => Role::Yes,
            _ => Role::Train,
        };
        for _ in 0..fresh {
            match sample_world_with(&params, gold, &mut r) {
                Ok(w) => out.push(WorldRecord::from_world(role, &w)),
                Err(WorldError::SamplingExhausted { .. }) => {
                    failures.bump("sampling");
                    continue 'attempts;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if instance.task == Task::Ci {
            if traps.is_empty() && spec.no > 0 {
                failures.bump("no_traps");
                break;
            }
            for j in 0..spec.no {
                let trap = &traps[j % traps.len()].formula;
                match no_world(&params, gold, trap, band.no_world_attempts.max(1), &mut r, |_| true) {
                    Ok(Some(w)) => out.push(WorldRecord::from_world(Role::No, &w)),
                    Ok(None) => {
                        failures.bump("no_world");
                        continue 'attempts;
                    }
                    Err(reason) => {
                        failures.bump(reason);
                        continue 'attempts;
                    }
                }
            }
        }
        return Ok(out);
    }
    Err(GenError::GenerationExhausted {
        gold: gold.to_string(),
        attempts: band.instance_retries,
        failures,
    })
}

use tracing::warn;

use crate::completion::ec_valid_all;
use crate::evaluation::Prediction;
use crate::fol::Formula;
use crate::generators::Generator;
use crate::instance::{ProblemInstance, Role, Task};
use crate::pool::{FrozenPool, Template};
use crate::sat::Budget;
use crate::semantics::{solves_ci, solves_fullobs};

pub const BASELINE_MODEL: &str = "baseline";

/// Enumerates a fixed candidate list in ascending AST size, ties broken by
/// canonical text, and answers with the first candidate that solves the
/// instance.
#[derive(Debug, Clone)]
pub struct Baseline {
    candidates: Vec<Formula>,
}

impl Baseline {
    pub fn new(templates: &[Template], pool: &FrozenPool) -> Self {
        let mut keyed: Vec<(usize, String, Formula)> = templates
            .iter()
            .map(|t| &t.formula)
            .chain(pool.members().map(|(_, f)| f))
            .map(|f| (f.ast_size(), f.to_string(), f.clone()))
            .collect();
        keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        keyed.dedup_by(|a, b| a.1 == b.1);
        Baseline {
            candidates: keyed.into_iter().map(|(_, _, f)| f).collect(),
        }
    }

    pub fn from_generator(g: &Generator) -> Self {
        Self::new(&g.templates, &g.pool)
    }

    pub fn candidates(&self) -> &[Formula] {
        &self.candidates
    }

    fn first_solution(&self, instance: &ProblemInstance, budget: Budget) -> Option<&Formula> {
        match instance.task {
            Task::FullObs => {
                let worlds = instance.worlds_with(Role::Train);
                self.candidates.iter().find(|f| solves_fullobs(f, &worlds))
            }
            Task::Ci => {
                let yes = instance.worlds_with(Role::Yes);
                let no = instance.worlds_with(Role::No);
                self.candidates.iter().find(|f| solves_ci(f, &yes, &no))
            }
            Task::Ec => {
                let worlds = instance.partial_worlds();
                self.candidates.iter().find(|f| match ec_valid_all(f, &worlds, budget) {
                    Ok(v) => v,
                    Err(e) => {
                        warn!(id = %instance.instance_id, formula = %f, %e, "skipping candidate");
                        false
                    }
                })
            }
        }
    }

    /// The first solving candidate, or a missing prediction when none solves it.
    pub fn solve(&self, instance: &ProblemInstance, budget: Budget) -> Prediction {
        match self.first_solution(instance, budget) {
            Some(f) => {
                let mut p = Prediction::from_formula(&instance.instance_id, BASELINE_MODEL, f.clone());
                p.raw_text = format!("{{\"formula\":\"{f}\",\"description\":\"first enumerated solution\"}}");
                p
            }
            None => Prediction::missing(&instance.instance_id, BASELINE_MODEL),
        }
    }
}

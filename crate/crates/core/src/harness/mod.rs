//! Prompt rendering, answer extraction, the external-solver adapter and
//! the enumeration baseline.

mod adapter;
mod baseline;
mod extract;
mod prompt;

pub use adapter::{
    run_external_solver, solve_one, AdapterError, AdapterReply, RetryPolicy, SolverRequest, SolverResponse,
};
pub use baseline::{Baseline, BASELINE_MODEL};
pub use extract::extract_formula;
pub use prompt::render_prompt;

use crate::instance::ProblemInstance;

pub fn request_for(instance: &ProblemInstance) -> SolverRequest {
    SolverRequest {
        instance_id: instance.instance_id.clone(),
        task: instance.task,
        prompt: render_prompt(instance),
    }
}

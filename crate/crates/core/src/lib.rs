//! Engine for generating, verifying and scoring finite-structure first-order
//! concept-synthesis benchmarks.

pub mod completion;
pub mod evaluation;
pub mod fol;
pub mod generators;
pub mod harness;
pub mod instance;
pub mod pool;
pub mod rng;
pub mod sat;
pub mod semantics;
pub mod world;

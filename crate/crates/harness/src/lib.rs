//! Instance generation, experiment orchestration and output for the
//! `jacobi-diag` solvers.

pub mod experiment;
pub mod generate;
pub mod manifest;
pub mod matching;
pub mod plot;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentSummary, SummaryRow};
pub use generate::{GeneratorDirective, Instance, Planted, PlantedTransform};

//! Multi-objective tuning of coding-agent hyperparameters.
//!
//! The pipeline: a typed [`space::ConfigSpace`] decoded from unit-interval
//! genomes, an NSGA-II driver in [`evolution`] that scores configurations
//! through an [`evaluation::Evaluator`], Pareto and hypervolume tooling in
//! [`metrics`], forest importances and rank tests in [`analysis`], and an
//! append-only JSONL [`ledger`] that makes runs resumable.

pub mod analysis;
pub mod evaluation;
pub mod evolution;
pub mod ledger;
pub mod metrics;
pub mod report;
pub mod space;

//! NSGA-II over the unit-interval genome.

mod engine;
pub mod operators;
pub mod sort;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::ObjectiveVector;
use crate::ledger::LedgerError;
use crate::metrics::MetricsError;
use crate::space::{Configuration, SpaceError};

pub use engine::{resume_state, run_nsga2, OptimizationResult, ResumeState, RunOptions};
pub use operators::{polynomial_mutation, sbx_crossover, survivor_selection, tournament_select};
pub use sort::{crowding_distance, fast_non_dominated_sort};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("objective vectors differ in length: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tournament needs at least 2 individuals, got {0}")]
    PopulationTooSmall(usize),
    #[error("cannot select {requested} survivors from {available}")]
    SelectTooMany { requested: usize, available: usize },
    #[error("invalid GA parameters: {0}")]
    InvalidParams(String),
    #[error("ledger parameters do not match this run: {0}")]
    ParamMismatch(String),
    #[error("no instances to evaluate")]
    NoInstances,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub crossover_eta: f64,
    pub mutation_probability: f64,
    pub mutation_eta: f64,
    pub seed: u64,
    /// Runtime (s) assigned to failed evaluations.
    #[serde(default = "default_penalty")]
    pub penalty_runtime: f64,
}

fn default_penalty() -> f64 {
    crate::evaluation::DEFAULT_PENALTY_RUNTIME
}

impl GAParams {
    /// Five generations of five, SBX at 0.9, one expected mutation per genome.
    pub fn for_dimension(n_vars: usize) -> Self {
        GAParams {
            population_size: 5,
            generations: 5,
            crossover_probability: 0.9,
            crossover_eta: 15.0,
            mutation_probability: 1.0 / n_vars.max(1) as f64,
            mutation_eta: 20.0,
            seed: 0,
            penalty_runtime: default_penalty(),
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: &str| Err(EvolutionError::InvalidParams(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.generations < 1 {
            return bad("generations must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) || !(0.0..=1.0).contains(&self.mutation_probability) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.crossover_eta > 0.0 && self.mutation_eta > 0.0) {
            return bad("distribution indices must be positive");
        }
        if self.penalty_runtime.is_nan() || self.penalty_runtime <= 0.0 {
            return bad("penalty_runtime must be positive");
        }
        Ok(())
    }
}

impl Default for GAParams {
    fn default() -> Self {
        GAParams::for_dimension(8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub configuration: Configuration,
    pub objectives: Option<ObjectiveVector>,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    /// Minimization form; unevaluated individuals sort last.
    pub fn minimization(&self) -> Vec<f64> {
        match self.objectives {
            Some(o) => o.to_minimization().to_vec(),
            None => vec![f64::INFINITY; 3],
        }
    }
}

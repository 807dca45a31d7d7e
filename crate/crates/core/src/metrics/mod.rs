//! Pareto dominance, front extraction and hypervolume.

mod dominance;
mod hypervolume;

use thiserror::Error;

pub use dominance::{
    dominates, dominates_min, improved_objectives, nondominated_indices, pareto_front, Duplicate, ParetoFront,
};
pub use hypervolume::{
    hypervolume3, hypervolume_of, hypervolume_raw, normalize, HypervolumeReport, NormBounds, DEFAULT_REFERENCE,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no records to compare")]
    Empty,
    #[error("point {0:?} does not dominate the reference point")]
    NotAboveReference([f64; 3]),
}

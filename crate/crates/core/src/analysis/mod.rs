//! Post-hoc analysis: which hyperparameters drive each objective, and the
//! rank test behind the performance-gain gate.

pub mod forest;
pub mod mwu;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{EvaluationRecord, Objective};
use crate::space::ConfigSpace;

pub use forest::{ForestParams, RegressionForest};
pub use mwu::{mann_whitney_u, significant_gain, UMethod, UTestResult, DEFAULT_ALPHA};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("empty sample")]
    EmptySample,
    #[error("samples must be finite")]
    NonFinite,
    #[error("need at least 2 measurements per side")]
    TooFewMeasurements,
    #[error("baseline mean {0} is not positive")]
    NonPositiveBaseline(f64),
    #[error("too few records: need at least 2, got {0}")]
    TooFewSamples(usize),
    #[error("feature rows must be non-empty and of equal length")]
    RaggedFeatures,
    #[error("forest needs n_trees >= 1 and min_samples_leaf >= 1")]
    BadForestParams,
}

pub const IMPORTANCE_METHOD: &str = "mean_decrease_impurity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub objective: Objective,
    pub importances: IndexMap<String, f64>,
    pub forest_params: ForestParams,
    pub sample_count: usize,
    pub method: String,
    /// Set when every target value was identical.
    #[serde(default)]
    pub constant_target: bool,
}

/// Numeric feature rows for every successful, non-baseline record that
/// assigns all parameters of `space`. Categorical values enter as their label's numeric value
/// (the prompt template as 1/2/3) or, failing that, their index.
pub fn feature_rows<'a>(
    space: &ConfigSpace,
    records: &'a [EvaluationRecord],
) -> (Vec<Vec<f64>>, Vec<&'a EvaluationRecord>) {
    let mut rows = Vec::new();
    let mut used = Vec::new();
    'records: for rec in records {
        if rec.status != crate::evaluation::Status::Ok || rec.is_baseline() {
            continue;
        }
        let mut row = Vec::with_capacity(space.n_vars());
        for p in space.params() {
            let Some(v) = rec.configuration.get(&p.name) else {
                continue 'records;
            };
            let numeric = v.as_f64().or_else(|| match v {
                crate::space::ParamValue::Category(label) => {
                    p.categories.iter().position(|c| c == label).map(|i| i as f64)
                }
                _ => None,
            });
            match numeric {
                Some(x) => row.push(x),
                None => continue 'records,
            }
        }
        rows.push(row);
        used.push(rec);
    }
    (rows, used)
}

/// Fits a forest of `objective` against the decoded hyperparameters and
/// reports one importance per parameter of the space.
pub fn importance_report(
    space: &ConfigSpace,
    records: &[EvaluationRecord],
    objective: Objective,
    params: &ForestParams,
) -> Result<ImportanceReport, AnalysisError> {
    let (x, used) = feature_rows(space, records);
    let y: Vec<f64> = used.iter().map(|r| r.objectives.get(objective)).collect();
    let forest = RegressionForest::fit(&x, &y, params)?;
    let importances = space
        .params()
        .iter()
        .map(|p| p.name.clone())
        .zip(forest.feature_importance())
        .collect();
    Ok(ImportanceReport {
        objective,
        importances,
        forest_params: forest.params().clone(),
        sample_count: y.len(),
        method: IMPORTANCE_METHOD.to_string(),
        constant_target: y.iter().all(|v| *v == y[0]),
    })
}

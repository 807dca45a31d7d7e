//! Objectives, the evaluator contract, and per-instance aggregation.
//!
//! Three objectives are tracked for every configuration: the fraction of
//! instances whose tests pass (maximize), the significance-gated percent
//! speedup of the patched code (maximize) and the agent's wall-clock time
//! (minimize). Internally the optimizer only sees the minimization form.

pub mod external;
pub mod replay;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::space::{ConfigId, Configuration};

pub use external::ExternalEvaluator;
pub use replay::{ReplayEvaluator, ReplayTrace, TraceEntry};
pub use synthetic::SyntheticEvaluator;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("configuration {0} not in trace")]
    NotInTrace(ConfigId),
    #[error("label `{0}` not in trace")]
    LabelNotInTrace(String),
    #[error("evaluator produced no instance results")]
    NoResults,
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("timeout after {0:.1} s")]
    Timeout(f64),
    #[error("command exited with status {code:?}: {stderr}")]
    ExitStatus { code: Option<i32>, stderr: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("i/o failure")]
    Io(#[from] std::io::Error),
    #[error("trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Correctness,
    PerfGain,
    Runtime,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Correctness, Objective::PerfGain, Objective::Runtime];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Correctness => "correctness",
            Objective::PerfGain => "perf_gain",
            Objective::Runtime => "runtime",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "correctness" | "corr" => Ok(Objective::Correctness),
            "perf_gain" | "perf" | "performance" => Ok(Objective::PerfGain),
            "runtime" | "rt" => Ok(Objective::Runtime),
            other => Err(format!("unknown objective `{other}`")),
        }
    }
}

/// (correctness, performance gain %, agent runtime s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub correctness: f64,
    pub perf_gain: f64,
    pub runtime: f64,
}

impl ObjectiveVector {
    pub fn new(correctness: f64, perf_gain: f64, runtime: f64) -> Self {
        ObjectiveVector {
            correctness,
            perf_gain,
            runtime,
        }
    }

    /// `(-correctness, -perf_gain, runtime)`.
    pub fn to_minimization(&self) -> [f64; 3] {
        [-self.correctness, -self.perf_gain, self.runtime]
    }

    pub fn from_minimization(v: [f64; 3]) -> Self {
        ObjectiveVector::new(-v[0], -v[1], v[2])
    }

    pub fn get(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Correctness => self.correctness,
            Objective::PerfGain => self.perf_gain,
            Objective::Runtime => self.runtime,
        }
    }
}

/// Outcome of running the agent on one benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub passed: bool,
    #[serde(rename = "agent_runtime_s")]
    pub agent_runtime: f64,
    #[serde(rename = "base_runtimes_s", default, skip_serializing_if = "Option::is_none")]
    pub base_runtimes: Option<Vec<f64>>,
    #[serde(rename = "patched_runtimes_s", default, skip_serializing_if = "Option::is_none")]
    pub patched_runtimes: Option<Vec<f64>>,
    /// Gain recorded upstream, used only when no runtime measurements are
    /// attached (aggregate-level replay rows).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_pct: Option<f64>,
}

impl InstanceResult {
    pub fn check(&self) -> Result<(), EvalError> {
        let id = &self.instance_id;
        if !(self.agent_runtime.is_finite() && self.agent_runtime > 0.0) {
            return Err(EvalError::Invariant(format!("{id}: agent runtime must be positive")));
        }
        match (&self.base_runtimes, &self.patched_runtimes) {
            (None, None) => {}
            (Some(base), Some(patched)) => {
                if base.len() < 2 || patched.len() < 2 {
                    return Err(EvalError::Invariant("runtime list < 2".into()));
                }
                if base.len() != patched.len() {
                    return Err(EvalError::Invariant(format!("{id}: runtime lists differ in length")));
                }
                if base.iter().chain(patched).any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(EvalError::Invariant(format!("{id}: runtimes must be positive")));
                }
            }
            _ => {
                return Err(EvalError::Invariant(format!(
                    "{id}: base and patched runtimes must be given together"
                )))
            }
        }
        if let Some(g) = self.gain_pct {
            if !(g.is_finite() && g >= 0.0) {
                return Err(EvalError::Invariant(format!("{id}: gain_pct must be >= 0")));
            }
        }
        Ok(())
    }

    /// Gated speedup credited to this instance.
    pub fn gain(&self, alpha: f64) -> Result<f64, EvalError> {
        if !self.passed {
            return Ok(0.0);
        }
        match (&self.base_runtimes, &self.patched_runtimes) {
            (Some(base), Some(patched)) => Ok(analysis::significant_gain(base, patched, alpha)?),
            _ => Ok(self.gain_pct.unwrap_or(0.0)),
        }
    }
}

/// Objectives over a set of instance results, with the default 0.1
/// significance threshold.
pub fn aggregate(results: &[InstanceResult]) -> Result<ObjectiveVector, EvalError> {
    aggregate_with_alpha(results, analysis::DEFAULT_ALPHA)
}

pub fn aggregate_with_alpha(results: &[InstanceResult], alpha: f64) -> Result<ObjectiveVector, EvalError> {
    if results.is_empty() {
        return Err(EvalError::NoResults);
    }
    let n = results.len() as f64;
    let mut passed = 0usize;
    let mut gain_sum = 0.0;
    let mut runtime_sum = 0.0;
    for r in results {
        r.check()?;
        passed += usize::from(r.passed);
        gain_sum += r.gain(alpha)?;
        runtime_sum += r.agent_runtime;
    }
    Ok(ObjectiveVector {
        correctness: passed as f64 / n,
        perf_gain: gain_sum / n,
        runtime: runtime_sum / n,
    })
}

/// Black-box evaluation backend.
pub trait Evaluator: Send + Sync {
    fn label(&self) -> String;

    /// Whether `evaluate` may be called from several threads at once.
    fn concurrent_safe(&self) -> bool;

    fn evaluate(&self, config: &Configuration, instances: &[String]) -> Result<Vec<InstanceResult>, EvalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub configuration: Configuration,
    pub objectives: ObjectiveVector,
    pub per_instance: Vec<InstanceResult>,
    pub generation: usize,
    /// Seconds spent inside the evaluator; 0 when timing is disabled.
    pub wall_time: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub evaluator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EvaluationRecord {
    pub fn is_baseline(&self) -> bool {
        self.configuration.baseline
    }

    /// Passed instances out of the evaluated total.
    pub fn pass_counts(&self) -> (usize, usize) {
        let n = self.per_instance.len();
        if n == 0 {
            return (0, 0);
        }
        let passed = self.per_instance.iter().filter(|r| r.passed).count();
        (passed, n)
    }

    /// Correctness rendered as `k/N`.
    pub fn correctness_fraction(&self) -> String {
        match self.pass_counts() {
            (_, 0) => format!("{:.3}", self.objectives.correctness),
            (k, n) => format!("{k}/{n}"),
        }
    }

    pub fn display_name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.configuration.id.to_string())
    }
}

/// Runtime (s) charged to a failed evaluation unless configured otherwise.
pub const DEFAULT_PENALTY_RUNTIME: f64 = 3600.0;

/// Penalty objectives for a failed evaluation.
pub fn penalty_objectives(penalty_runtime: f64) -> ObjectiveVector {
    ObjectiveVector::new(0.0, 0.0, penalty_runtime)
}

/// Runs one evaluation and turns any evaluator failure into a failed
/// record carrying penalty objectives.
pub fn evaluate_record(
    evaluator: &dyn Evaluator,
    config: &Configuration,
    instances: &[String],
    generation: usize,
    penalty_runtime: f64,
    timed: bool,
) -> EvaluationRecord {
    let start = Instant::now();
    let outcome = evaluator
        .evaluate(config, instances)
        .and_then(|results| aggregate(&results).map(|obj| (results, obj)));
    let wall_time = if timed { start.elapsed().as_secs_f64() } else { 0.0 };
    let (objectives, per_instance, status, failure) = match outcome {
        Ok((results, obj)) => (obj, results, Status::Ok, None),
        Err(e) => (penalty_objectives(penalty_runtime), Vec::new(), Status::Failed, Some(e.to_string())),
    };
    EvaluationRecord {
        configuration: config.clone(),
        objectives,
        per_instance,
        generation,
        wall_time,
        status,
        failure,
        evaluator: evaluator.label(),
        label: None,
    }
}

//! Offline replay of stored evaluation results.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::space::{default_space, ConfigDocument, ConfigId, ConfigSpace, Configuration};

use super::{evaluate_record, EvalError, EvaluationRecord, Evaluator, InstanceResult, DEFAULT_PENALTY_RUNTIME};

/// Six-row comparison of the default agent configuration against five
/// tuned ones, nine training instances each.
pub const BUNDLED_TRACE: &str = include_str!("../../fixtures/comparison_trace.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawEntry {
    label: String,
    config: ConfigDocument,
    results: Vec<InstanceResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub label: String,
    pub config: Configuration,
    pub results: Vec<InstanceResult>,
}

#[derive(Debug, Clone)]
pub struct ReplayTrace {
    entries: Vec<TraceEntry>,
    by_id: HashMap<ConfigId, usize>,
    by_label: HashMap<String, usize>,
}

impl ReplayTrace {
    pub fn from_json(text: &str, space: &ConfigSpace) -> Result<Self, EvalError> {
        let raw: Vec<RawEntry> = serde_json::from_str(text).map_err(|e| EvalError::Trace(e.to_string()))?;
        let mut entries = Vec::with_capacity(raw.len());
        let mut by_id = HashMap::new();
        let mut by_label = HashMap::new();
        for (i, e) in raw.into_iter().enumerate() {
            let config = e
                .config
                .resolve(space)
                .map_err(|err| EvalError::Trace(format!("row `{}`: {err}", e.label)))?;
            if e.results.is_empty() {
                return Err(EvalError::Trace(format!("row `{}` has no results", e.label)));
            }
            for r in &e.results {
                r.check()?;
            }
            if by_id.insert(config.id.clone(), i).is_some() {
                return Err(EvalError::Trace(format!("row `{}` repeats a configuration", e.label)));
            }
            if by_label.insert(e.label.clone(), i).is_some() {
                return Err(EvalError::Trace(format!("duplicate label `{}`", e.label)));
            }
            entries.push(TraceEntry {
                label: e.label,
                config,
                results: e.results,
            });
        }
        Ok(ReplayTrace {
            entries,
            by_id,
            by_label,
        })
    }

    pub fn load(path: &Path, space: &ConfigSpace) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, space)
    }

    /// The bundled comparison table, resolved against the default space.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_TRACE, &default_space()).expect("bundled fixture parses")
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn by_id(&self, id: &ConfigId) -> Option<&TraceEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn by_label(&self, label: &str) -> Option<&TraceEntry> {
        self.by_label.get(label).map(|&i| &self.entries[i])
    }

    pub fn to_json(&self) -> String {
        let raw: Vec<RawEntry> = self
            .entries
            .iter()
            .map(|e| RawEntry {
                label: e.label.clone(),
                config: ConfigDocument::from(&e.config),
                results: e.results.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("trace serializes")
    }
}

/// Stored results for `config`, looked up by configuration id.
pub fn replay_evaluate(config: &Configuration, trace: &ReplayTrace) -> Result<Vec<InstanceResult>, EvalError> {
    trace
        .by_id(&config.id)
        .map(|e| e.results.clone())
        .ok_or_else(|| EvalError::NotInTrace(config.id.clone()))
}

pub fn replay_label(label: &str, trace: &ReplayTrace) -> Result<Vec<InstanceResult>, EvalError> {
    trace
        .by_label(label)
        .map(|e| e.results.clone())
        .ok_or_else(|| EvalError::LabelNotInTrace(label.to_string()))
}

/// Returns stored results verbatim; the requested instance list is ignored.
#[derive(Debug, Clone)]
pub struct ReplayEvaluator {
    trace: ReplayTrace,
}

impl ReplayEvaluator {
    pub fn new(trace: ReplayTrace) -> Self {
        ReplayEvaluator { trace }
    }

    pub fn trace(&self) -> &ReplayTrace {
        &self.trace
    }

    /// One labeled generation-0 record per trace entry, in trace order.
    pub fn records(&self) -> Vec<EvaluationRecord> {
        self.trace
            .entries()
            .iter()
            .map(|e| {
                let mut record = evaluate_record(self, &e.config, &[], 0, DEFAULT_PENALTY_RUNTIME, false);
                record.label = Some(e.label.clone());
                record
            })
            .collect()
    }
}

impl Evaluator for ReplayEvaluator {
    fn label(&self) -> String {
        "replay".into()
    }

    fn concurrent_safe(&self) -> bool {
        true
    }

    fn evaluate(&self, config: &Configuration, _instances: &[String]) -> Result<Vec<InstanceResult>, EvalError> {
        replay_evaluate(config, &self.trace)
    }
}

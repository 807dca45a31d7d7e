//! Resolution of run settings from flags, environment and manifest.
//!
//! clap already folds environment variables into the flag values, so the
//! precedence is flag, then environment, then manifest, then the built-in
//! default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use agenttune::evaluation::{Evaluator, ExternalEvaluator, ReplayEvaluator, ReplayTrace, SyntheticEvaluator};
use agenttune::evolution::GAParams;
use agenttune::space::{default_space, ConfigSpace};
use anyhow::Context;
use serde::Deserialize;

use crate::{input_error, Classify, EvaluatorArgs, Failure, InstancesArg, SpaceArg};

/// Optional GA overrides as they may appear in a manifest.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GAOverrides {
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_probability: Option<f64>,
    pub crossover_eta: Option<f64>,
    pub mutation_probability: Option<f64>,
    pub mutation_eta: Option<f64>,
    pub seed: Option<u64>,
    pub penalty_runtime: Option<f64>,
}

impl GAOverrides {
    pub fn apply(&self, params: &mut GAParams) {
        let GAOverrides {
            population_size,
            generations,
            crossover_probability,
            crossover_eta,
            mutation_probability,
            mutation_eta,
            seed,
            penalty_runtime,
        } = self;
        if let Some(v) = population_size {
            params.population_size = *v;
        }
        if let Some(v) = generations {
            params.generations = *v;
        }
        if let Some(v) = crossover_probability {
            params.crossover_probability = *v;
        }
        if let Some(v) = crossover_eta {
            params.crossover_eta = *v;
        }
        if let Some(v) = mutation_probability {
            params.mutation_probability = *v;
        }
        if let Some(v) = mutation_eta {
            params.mutation_eta = *v;
        }
        if let Some(v) = seed {
            params.seed = *v;
        }
        if let Some(v) = penalty_runtime {
            params.penalty_runtime = *v;
        }
    }
}

/// Run manifest file. Relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub space: Option<PathBuf>,
    /// `synthetic`, `replay:<trace path>` or `external:<command>`.
    pub evaluator: Option<String>,
    pub timeout_s: Option<f64>,
    pub instances: Option<Vec<String>>,
    #[serde(default)]
    pub ga_params: GAOverrides,
    pub ledger: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
    pub parallel_evals: Option<usize>,
    pub baseline: Option<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))
            .input()?;
        let mut manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("invalid manifest {}", path.display()))
            .input()?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        rebase(&mut manifest.space);
        rebase(&mut manifest.ledger);
        rebase(&mut manifest.report_dir);
        rebase(&mut manifest.baseline);
        if let Some(spec) = manifest.evaluator.as_mut() {
            if let Some(trace) = spec.strip_prefix("replay:") {
                let trace = Path::new(trace);
                if trace.is_relative() {
                    *spec = format!("replay:{}", base.join(trace).display());
                }
            }
        }
        Ok(manifest)
    }
}

pub fn load_space(arg: &SpaceArg, fallback: Option<&PathBuf>) -> Result<ConfigSpace, Failure> {
    match arg.space.as_ref().or(fallback) {
        None => Ok(default_space()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading space file {}", path.display()))
                .input()?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid space file {}", path.display()))
                .input()
        }
    }
}

pub struct EvaluatorSetup {
    pub evaluator: Box<dyn Evaluator>,
    /// Trace instance ids, used when no instance list is given.
    pub default_instances: Vec<String>,
}

pub fn build_evaluator(
    args: &EvaluatorArgs,
    manifest: &RunManifest,
    space: &ConfigSpace,
) -> Result<EvaluatorSetup, Failure> {
    let spec = args
        .evaluator
        .clone()
        .or_else(|| manifest.evaluator.clone())
        .unwrap_or_else(|| "synthetic".to_string());
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k.to_string(), Some(r.to_string())),
        None => (spec.clone(), None),
    };
    match kind.as_str() {
        "synthetic" => Ok(EvaluatorSetup {
            evaluator: Box::new(SyntheticEvaluator),
            default_instances: Vec::new(),
        }),
        "replay" => {
            let path = args.trace.clone().or(rest.map(PathBuf::from));
            let trace = match path {
                None => ReplayTrace::bundled(),
                Some(p) => ReplayTrace::load(&p, space)
                    .with_context(|| format!("loading trace {}", p.display()))
                    .environment()?,
            };
            let default_instances = trace
                .entries()
                .first()
                .map(|e| e.results.iter().map(|r| r.instance_id.clone()).collect())
                .unwrap_or_default();
            Ok(EvaluatorSetup {
                evaluator: Box::new(ReplayEvaluator::new(trace)),
                default_instances,
            })
        }
        "external" => {
            let command = args
                .command
                .clone()
                .or(rest)
                .filter(|c| !c.trim().is_empty())
                .ok_or_else(|| input_error("the external evaluator needs --command"))?;
            let secs = args.timeout.or(manifest.timeout_s).unwrap_or(4.0 * 3600.0);
            if !(secs > 0.0 && secs.is_finite()) {
                return Err(input_error(format!("timeout must be positive, got {secs}")));
            }
            Ok(EvaluatorSetup {
                evaluator: Box::new(ExternalEvaluator::new(command, Duration::from_secs_f64(secs))),
                default_instances: Vec::new(),
            })
        }
        other => Err(input_error(format!(
            "unknown evaluator `{other}` (expected synthetic, replay or external)"
        ))),
    }
}

/// Instance ids from the flag (with `@file` expansion), else `fallback`.
/// An empty result is an input error.
pub fn resolve_instances(arg: &InstancesArg, fallback: &[String]) -> Result<Vec<String>, Failure> {
    let ids: Vec<String> = match &arg.instances {
        Some(list) if list.len() == 1 && list[0].starts_with('@') => {
            let path = &list[0][1..];
            std::fs::read_to_string(path)
                .with_context(|| format!("reading instance list {path}"))
                .input()?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect()
        }
        Some(list) => list.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => fallback.to_vec(),
    };
    if ids.is_empty() {
        return Err(input_error("instance list is empty"));
    }
    Ok(ids)
}

pub fn parse_numbers(text: &str) -> anyhow::Result<Vec<f64>> {
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("not a number: `{t}`")))
        .collect()
}

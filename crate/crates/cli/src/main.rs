mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit status contract: 0 success, 2 bad input, 3 evaluator or
/// environment failure.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Environment(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Environment(_) => 3,
        }
    }
}

pub type CmdResult = Result<(), Failure>;

pub trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn environment(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn environment(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Environment(e.into()))
    }
}

pub fn input_error(msg: impl std::fmt::Display) -> Failure {
    Failure::Input(anyhow::anyhow!("{msg}"))
}

#[derive(Parser)]
#[command(name = "agenttune", version, about = "Multi-objective hyperparameter search for coding agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run NSGA-II and write every evaluation to a ledger.
    Optimize(OptimizeArgs),
    /// Show the non-dominated records of a ledger.
    Pareto(ParetoArgs),
    /// Normalized hypervolume of a ledger selection.
    Hypervolume(HypervolumeArgs),
    /// Forest feature importance per objective.
    Importance(ImportanceArgs),
    /// Mann-Whitney U test on two measurement files.
    Significance(SignificanceArgs),
    /// Re-evaluate the Pareto members (and baseline) on held-out instances.
    Validate(ValidateArgs),
    /// Evaluate a single configuration.
    Evaluate(EvaluateArgs),
    /// Write a ledger holding every row of a replay trace.
    ImportTrace(ImportTraceArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpaceArg {
    /// JSON parameter space file (default: the built-in eight-parameter space).
    #[arg(long, env = "AGENTTUNE_SPACE")]
    pub space: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct EvaluatorArgs {
    /// synthetic | replay[:TRACE] | external[:COMMAND]
    #[arg(long, env = "AGENTTUNE_EVALUATOR")]
    pub evaluator: Option<String>,
    /// Replay trace file (default: the bundled six-row trace).
    #[arg(long, env = "AGENTTUNE_TRACE")]
    pub trace: Option<PathBuf>,
    /// Shell command for the external evaluator.
    #[arg(long, env = "AGENTTUNE_COMMAND")]
    pub command: Option<String>,
    /// Per-evaluation timeout in seconds for the external evaluator.
    #[arg(long, env = "AGENTTUNE_TIMEOUT")]
    pub timeout: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct InstancesArg {
    /// Comma-separated instance ids, or @FILE with one id per line.
    #[arg(long, env = "AGENTTUNE_INSTANCES", value_delimiter = ',')]
    pub instances: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// JSON run manifest; flags and environment variables override it.
    #[arg(long, env = "AGENTTUNE_MANIFEST")]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub space: SpaceArg,
    #[command(flatten)]
    pub evaluator: EvaluatorArgs,
    #[command(flatten)]
    pub instances: InstancesArg,
    #[arg(long, env = "AGENTTUNE_POP")]
    pub pop: Option<usize>,
    #[arg(long, env = "AGENTTUNE_GENS")]
    pub gens: Option<usize>,
    #[arg(long, env = "AGENTTUNE_SEED")]
    pub seed: Option<u64>,
    /// Runtime (s) charged to failed evaluations.
    #[arg(long, env = "AGENTTUNE_PENALTY_RUNTIME")]
    pub penalty_runtime: Option<f64>,
    #[arg(long, env = "AGENTTUNE_LEDGER")]
    pub ledger: Option<PathBuf>,
    /// Continue an existing ledger instead of refusing to overwrite it.
    #[arg(long, env = "AGENTTUNE_RESUME")]
    pub resume: bool,
    /// Concurrent evaluations per generation (concurrency-safe evaluators only).
    #[arg(long, env = "AGENTTUNE_PARALLEL_EVALS")]
    pub parallel_evals: Option<usize>,
    /// Configuration file evaluated once and stored as a baseline record.
    #[arg(long, env = "AGENTTUNE_BASELINE")]
    pub baseline: Option<PathBuf>,
    /// Directory for CSV and JSON reports.
    #[arg(long, env = "AGENTTUNE_REPORT_DIR")]
    pub report_dir: Option<PathBuf>,
    /// Zero wall times and a fixed timestamp so equal seeds give equal bytes.
    #[arg(long, env = "AGENTTUNE_REPRODUCIBLE")]
    pub reproducible: bool,
    /// Stop after this generation (0 = initial population).
    #[arg(long, env = "AGENTTUNE_STOP_AFTER")]
    pub stop_after: Option<usize>,
    #[arg(long, env = "AGENTTUNE_JSON")]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ParetoArgs {
    #[arg(long, env = "AGENTTUNE_LEDGER")]
    pub ledger: PathBuf,
    #[arg(long, env = "AGENTTUNE_JSON")]
    pub json: bool,
    /// Print CSV instead of an aligned table.
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct HypervolumeArgs {
    #[arg(long, env = "AGENTTUNE_LEDGER")]
    pub ledger: PathBuf,
    /// all | front | baseline | label:A,B | id:X,Y
    #[arg(long, default_value = "all")]
    pub select: String,
    /// Reference point in normalized space, as three comma-separated values.
    #[arg(long, env = "AGENTTUNE_REFERENCE")]
    pub reference: Option<String>,
    /// Normalization bounds: corr_min,corr_max,gain_min,gain_max,rt_min,rt_max.
    #[arg(long, env = "AGENTTUNE_BOUNDS")]
    pub bounds: Option<String>,
    /// Induce bounds from the whole ledger or from the selection only.
    #[arg(long, default_value = "ledger", value_parser = ["ledger", "selection"])]
    pub bounds_from: String,
    #[arg(long, env = "AGENTTUNE_JSON")]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ImportanceArgs {
    #[arg(long, env = "AGENTTUNE_LEDGER")]
    pub ledger: PathBuf,
    #[command(flatten)]
    pub space: SpaceArg,
    /// correctness | perf_gain | runtime | all
    #[arg(long, default_value = "all")]
    pub objective: String,
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    /// Features tried per split (default: ceil(p/3)).
    #[arg(long)]
    pub max_features: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 0)]
    pub forest_seed: u64,
    #[arg(long, env = "AGENTTUNE_JSON")]
    pub json: bool,
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct SignificanceArgs {
    /// Baseline measurements: JSON array or whitespace/comma separated numbers.
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub patched: PathBuf,
    #[arg(long, env = "AGENTTUNE_ALPHA", default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, env = "AGENTTUNE_JSON")]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, env = "AGENTTUNE_LEDGER")]
    pub ledger: PathBuf,
    #[command(flatten)]
    pub space: SpaceArg,
    #[command(flatten)]
    pub evaluator: EvaluatorArgs,
    /// Held-out instance ids.
    #[command(flatten)]
    pub instances: InstancesArg,
    #[arg(long, env = "AGENTTUNE_PARALLEL_EVALS")]
    pub parallel_evals: Option<usize>,
    #[arg(long, env = "AGENTTUNE_JSON")]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Configuration JSON: {"values": {...}, "baseline": false}.
    #[arg(long, env = "AGENTTUNE_CONFIG")]
    pub config: PathBuf,
    #[command(flatten)]
    pub space: SpaceArg,
    #[command(flatten)]
    pub evaluator: EvaluatorArgs,
    #[command(flatten)]
    pub instances: InstancesArg,
    #[arg(long, env = "AGENTTUNE_ALPHA", default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, env = "AGENTTUNE_JSON")]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ImportTraceArgs {
    #[arg(long, env = "AGENTTUNE_TRACE")]
    pub trace: Option<PathBuf>,
    #[arg(long, env = "AGENTTUNE_LEDGER")]
    pub ledger: PathBuf,
    #[command(flatten)]
    pub space: SpaceArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(a) => commands::optimize(a),
        Command::Pareto(a) => commands::pareto(a),
        Command::Hypervolume(a) => commands::hypervolume(a),
        Command::Importance(a) => commands::importance(a),
        Command::Significance(a) => commands::significance(a),
        Command::Validate(a) => commands::validate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::ImportTrace(a) => commands::import_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Input(e) | Failure::Environment(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.code())
        }
    }
}

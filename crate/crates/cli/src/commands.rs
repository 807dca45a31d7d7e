use std::fs;
use std::path::{Path, PathBuf};

use agenttune::analysis::forest::ForestParams;
use agenttune::analysis::mwu::{mann_whitney_u, mean, significant_gain, UTestResult};
use agenttune::analysis::{importance_report, AnalysisError, ImportanceReport};
use agenttune::evaluation::{
    aggregate_with_alpha, evaluate_record, EvaluationRecord, Evaluator, InstanceResult, Objective, ObjectiveVector,
    ReplayEvaluator, ReplayTrace, Status, DEFAULT_PENALTY_RUNTIME,
};
use agenttune::evolution::{run_nsga2, EvolutionError, GAParams, RunOptions};
use agenttune::ledger::{load_ledger, LedgerError, LedgerHeader, RunLedger};
use agenttune::metrics::{
    dominates, hypervolume_of, improved_objectives, pareto_front, HypervolumeReport, NormBounds, DEFAULT_REFERENCE,
};
use agenttune::report::{render_importance, render_rows, report_rows, write_importance_csv, write_rows_csv, ReportRow};
use agenttune::space::{ConfigDocument, ConfigSpace, Configuration};
use anyhow::{anyhow, Context};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::settings::{build_evaluator, load_space, parse_numbers, resolve_instances, RunManifest};
use crate::{
    input_error, Classify, CmdResult, EvaluateArgs, Failure, HypervolumeArgs, ImportTraceArgs, ImportanceArgs,
    OptimizeArgs, ParetoArgs, SignificanceArgs, ValidateArgs,
};

const REPRODUCIBLE_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn print_json(value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).environment()?;
    println!("{text}");
    Ok(())
}

fn open_ledger(path: &Path) -> Result<RunLedger, Failure> {
    let ledger = load_ledger(path)
        .with_context(|| format!("cannot read ledger {}", path.display()))
        .input()?;
    if ledger.ignored_partial_lines() > 0 {
        eprintln!("warning: ignored a partially written last line in {}", path.display());
    }
    Ok(ledger)
}

fn ok_records(records: &[EvaluationRecord]) -> Vec<EvaluationRecord> {
    records.iter().filter(|r| r.status == Status::Ok).cloned().collect()
}

fn candidates(records: &[EvaluationRecord]) -> Vec<EvaluationRecord> {
    records
        .iter()
        .filter(|r| r.status == Status::Ok && !r.is_baseline())
        .cloned()
        .collect()
}

fn baselines(records: &[EvaluationRecord]) -> Vec<EvaluationRecord> {
    records.iter().filter(|r| r.is_baseline()).cloned().collect()
}

/// Bounds shared by every row of a table: all successful records shown
/// or stored alongside them.
fn table_bounds(records: &[EvaluationRecord]) -> Option<NormBounds> {
    let vectors: Vec<ObjectiveVector> = records
        .iter()
        .filter(|r| r.status == Status::Ok)
        .map(|r| r.objectives)
        .collect();
    NormBounds::induced(&vectors)
}

#[derive(Deserialize)]
struct ConfigFile {
    #[serde(default)]
    label: Option<String>,
    #[serde(flatten)]
    doc: ConfigDocument,
}

fn read_config(path: &Path, space: &ConfigSpace, force_baseline: bool) -> Result<(Configuration, Option<String>), Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading configuration {}", path.display()))
        .input()?;
    let mut file: ConfigFile = serde_json::from_str(&text)
        .with_context(|| format!("invalid configuration file {}", path.display()))
        .input()?;
    file.doc.baseline |= force_baseline;
    let config = file
        .doc
        .resolve(space)
        .with_context(|| format!("configuration {} is not valid for the space", path.display()))
        .input()?;
    Ok((config, file.label))
}

fn evolution_failure(e: EvolutionError) -> Failure {
    match e {
        EvolutionError::Ledger(LedgerError::Io(_)) => Failure::Environment(e.into()),
        other => Failure::Input(other.into()),
    }
}

// optimize -------------------------------------------------------------------

#[derive(Serialize)]
struct OptimizeSummary {
    ledger: PathBuf,
    evaluations_run: usize,
    records_in_ledger: usize,
    completed_generations: usize,
    complete: bool,
    ga_params: GAParams,
    per_generation_hypervolume: Vec<f64>,
    hypervolume_bounds: Option<NormBounds>,
    pareto: Vec<ReportRow>,
    baseline: Vec<ReportRow>,
}

pub fn optimize(args: OptimizeArgs) -> CmdResult {
    let manifest = match &args.manifest {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    let space = load_space(&args.space, manifest.space.as_ref())?;
    let ledger_path = args
        .ledger
        .clone()
        .or(manifest.ledger.clone())
        .ok_or_else(|| input_error("no ledger path: pass --ledger or set it in the manifest"))?;

    let existing = if ledger_path.exists() {
        if !args.resume {
            return Err(input_error(format!(
                "ledger {} already exists; pass --resume to continue it",
                ledger_path.display()
            )));
        }
        Some(RunLedger::open(&ledger_path).input()?)
    } else {
        None
    };

    let setup = build_evaluator(&args.evaluator, &manifest, &space)?;
    let mut fallback = manifest.instances.clone().unwrap_or_default();
    if let Some(l) = &existing {
        if fallback.is_empty() {
            fallback = l.header().instances.clone();
        }
    }
    if fallback.is_empty() {
        fallback = setup.default_instances.clone();
    }
    let instances = resolve_instances(&args.instances, &fallback)?;

    let mut params = existing
        .as_ref()
        .and_then(|l| l.header().ga_params.clone())
        .unwrap_or_else(|| GAParams::for_dimension(space.n_vars()));
    manifest.ga_params.apply(&mut params);
    if let Some(v) = args.pop {
        params.population_size = v;
    }
    if let Some(v) = args.gens {
        params.generations = v;
    }
    if let Some(v) = args.seed {
        params.seed = v;
    }
    if let Some(v) = args.penalty_runtime {
        params.penalty_runtime = v;
    }
    params.validate().input()?;

    let evaluator: &dyn Evaluator = setup.evaluator.as_ref();
    let mut ledger = match existing {
        Some(l) => l,
        None => {
            let created = if args.reproducible { REPRODUCIBLE_TIMESTAMP.to_string() } else { now() };
            let header = LedgerHeader::new(&space, Some(&params), &evaluator.label(), &instances, &created);
            RunLedger::create(&ledger_path, header).environment()?
        }
    };

    if let Some(path) = args.baseline.as_ref().or(manifest.baseline.as_ref()) {
        let (config, label) = read_config(path, &space, true)?;
        if !ledger.contains(&config.id) {
            let mut record =
                evaluate_record(evaluator, &config, &instances, 0, params.penalty_runtime, !args.reproducible);
            record.label = Some(label.unwrap_or_else(|| "baseline".to_string()));
            if let Some(reason) = &record.failure {
                eprintln!("warning: baseline evaluation failed: {reason}");
            }
            ledger.append(&record).environment()?;
        }
    }

    let options = RunOptions {
        parallel_evals: args.parallel_evals.or(manifest.parallel_evals).unwrap_or(1).max(1),
        timed: !args.reproducible,
        stop_after_generation: args.stop_after,
    };
    let result = run_nsga2(&space, evaluator, &instances, &params, &mut ledger, &options).map_err(evolution_failure)?;

    let stored = ledger.records().to_vec();
    let base = baselines(&stored);
    let mut shown = base.clone();
    shown.extend(result.pareto.members.iter().cloned());
    let bounds = table_bounds(&shown);
    let pareto_rows = report_rows(&space, &result.pareto.members, bounds);
    let baseline_rows = report_rows(&space, &base, bounds);

    if let Some(dir) = args.report_dir.as_ref().or(manifest.report_dir.as_ref()) {
        fs::create_dir_all(dir).environment()?;
        let mut rows = baseline_rows.clone();
        rows.extend(pareto_rows.iter().cloned());
        write_rows_csv(&space, &rows, fs::File::create(dir.join("pareto.csv")).environment()?).environment()?;
        let all_rows = report_rows(&space, &stored, table_bounds(&stored));
        write_rows_csv(&space, &all_rows, fs::File::create(dir.join("records.csv")).environment()?)
            .environment()?;
    }

    let summary = OptimizeSummary {
        ledger: ledger_path.clone(),
        evaluations_run: result.evaluations_run,
        records_in_ledger: stored.len(),
        completed_generations: result.completed_generations,
        complete: result.complete,
        ga_params: params,
        per_generation_hypervolume: result.per_generation_hypervolume.clone(),
        hypervolume_bounds: result.hypervolume_bounds,
        pareto: pareto_rows,
        baseline: baseline_rows,
    };
    if let Some(dir) = args.report_dir.as_ref().or(manifest.report_dir.as_ref()) {
        let text = serde_json::to_string_pretty(&summary).environment()?;
        fs::write(dir.join("summary.json"), text).environment()?;
    }
    if args.json {
        return print_json(&summary);
    }

    println!(
        "ledger {}: {} records, {} evaluated in this run",
        ledger_path.display(),
        summary.records_in_ledger,
        summary.evaluations_run
    );
    for (g, hv) in summary.per_generation_hypervolume.iter().enumerate() {
        println!("generation {g}: cumulative hypervolume {hv:.2}%");
    }
    if !summary.complete {
        println!("stopped after generation {}", summary.completed_generations);
    }
    let mut rows = summary.baseline.clone();
    rows.extend(summary.pareto.iter().cloned());
    println!(
        "\nPareto front: {} of {} evaluated configurations",
        summary.pareto.len(),
        result.all_records.len()
    );
    print!("{}", render_rows(&space, &rows));
    Ok(())
}

// pareto ---------------------------------------------------------------------

#[derive(Serialize)]
struct MemberRow {
    #[serde(flatten)]
    row: ReportRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    objectives_better_than_baseline: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dominates_baseline: Option<bool>,
}

#[derive(Serialize)]
struct DuplicateNote {
    config: String,
    duplicate_of: String,
}

#[derive(Serialize)]
struct ParetoOutput {
    ledger: PathBuf,
    extracted_from: usize,
    members: Vec<MemberRow>,
    duplicates: Vec<DuplicateNote>,
    baseline: Option<ReportRow>,
    members_dominating_baseline: Option<usize>,
}

pub fn pareto(args: ParetoArgs) -> CmdResult {
    let ledger = open_ledger(&args.ledger)?;
    let space = ledger.header().space.clone();
    let records = ledger.records();
    let pool = candidates(records);
    if pool.is_empty() {
        return Err(input_error("ledger has no successful non-baseline records"));
    }
    let front = pareto_front(&pool).input()?;
    let baseline = baselines(records).into_iter().find(|r| r.status == Status::Ok);

    let mut shown = front.members.clone();
    shown.extend(baseline.iter().cloned());
    let bounds = table_bounds(&shown);
    let rows = report_rows(&space, &front.members, bounds);
    let members: Vec<MemberRow> = rows
        .into_iter()
        .zip(&front.members)
        .map(|(row, rec)| MemberRow {
            row,
            objectives_better_than_baseline: baseline.as_ref().map(|b| improved_objectives(&rec.objectives, &b.objectives)),
            dominates_baseline: baseline.as_ref().map(|b| dominates(&rec.objectives, &b.objectives)),
        })
        .collect();
    let duplicates = front
        .duplicates
        .iter()
        .map(|d| DuplicateNote {
            config: d.record.display_name(),
            duplicate_of: front.members[d.duplicate_of].display_name(),
        })
        .collect();
    let output = ParetoOutput {
        ledger: args.ledger.clone(),
        extracted_from: front.extracted_from,
        members_dominating_baseline: baseline
            .as_ref()
            .map(|_| members.iter().filter(|m| m.dominates_baseline == Some(true)).count()),
        baseline: baseline
            .as_ref()
            .map(|b| report_rows(&space, std::slice::from_ref(b), bounds).remove(0)),
        members,
        duplicates,
    };

    if args.json {
        return print_json(&output);
    }
    let rows: Vec<ReportRow> = output.members.iter().map(|m| m.row.clone()).collect();
    if args.csv {
        return write_rows_csv(&space, &rows, std::io::stdout().lock()).environment();
    }
    println!(
        "{} non-dominated of {} successful records",
        output.members.len(),
        output.extracted_from
    );
    print!("{}", render_rows(&space, &rows));
    for d in &output.duplicates {
        println!("note: {} has the same objectives as {}", d.config, d.duplicate_of);
    }
    if let (Some(b), Some(count)) = (&output.baseline, output.members_dominating_baseline) {
        println!("\nagainst baseline {} ({}, {:.2}%, {:.1} s):", b.config, b.correctness_fraction, b.perf_gain, b.runtime);
        for m in &output.members {
            let better = m.objectives_better_than_baseline.unwrap_or(0);
            let verdict = if m.dominates_baseline == Some(true) { "dominates" } else { "does not dominate" };
            println!("  {}: better in {better}/3 objectives, {verdict}", m.row.config);
        }
        println!("{count} of {} members dominate the baseline", output.members.len());
    }
    Ok(())
}

// hypervolume ----------------------------------------------------------------

fn parse_floats<const N: usize>(text: &str, what: &str) -> Result<[f64; N], Failure> {
    let values: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| input_error(format!("invalid {what} `{text}`: {e}")))?;
    values
        .try_into()
        .map_err(|_| input_error(format!("{what} needs {N} comma-separated numbers, got `{text}`")))
}

fn select(records: &[EvaluationRecord], selector: &str) -> Result<Vec<EvaluationRecord>, Failure> {
    let ok = ok_records(records);
    let picked = match selector.split_once(':') {
        None if selector == "all" => ok,
        None if selector == "baseline" => ok.into_iter().filter(|r| r.is_baseline()).collect(),
        None if selector == "front" => {
            let pool = candidates(records);
            if pool.is_empty() {
                Vec::new()
            } else {
                pareto_front(&pool).input()?.members
            }
        }
        Some(("label", list)) => {
            let wanted: Vec<&str> = list.split(',').map(str::trim).collect();
            ok.into_iter()
                .filter(|r| r.label.as_deref().is_some_and(|l| wanted.contains(&l)))
                .collect()
        }
        Some(("id", list)) => {
            let wanted: Vec<&str> = list.split(',').map(str::trim).collect();
            ok.into_iter()
                .filter(|r| wanted.contains(&r.configuration.id.0.as_str()))
                .collect()
        }
        _ => return Err(input_error(format!("unknown selection `{selector}`"))),
    };
    Ok(picked)
}

#[derive(Serialize)]
struct HypervolumeOutput {
    selection: String,
    selected: usize,
    #[serde(flatten)]
    report: HypervolumeReport,
}

pub fn hypervolume(args: HypervolumeArgs) -> CmdResult {
    let ledger = open_ledger(&args.ledger)?;
    let selected = select(ledger.records(), &args.select)?;
    if selected.is_empty() {
        return Err(input_error(format!("selection `{}` is empty", args.select)));
    }
    let reference = match &args.reference {
        Some(text) => parse_floats::<3>(text, "reference point")?,
        None => DEFAULT_REFERENCE,
    };
    let bounds = match &args.bounds {
        Some(text) => {
            let v = parse_floats::<6>(text, "bounds")?;
            Some(NormBounds {
                correctness: (v[0], v[1]),
                perf_gain: (v[2], v[3]),
                runtime: (v[4], v[5]),
            })
        }
        None if args.bounds_from == "ledger" => table_bounds(ledger.records()),
        None => None,
    };
    let vectors: Vec<ObjectiveVector> = selected.iter().map(|r| r.objectives).collect();
    let report = hypervolume_of(&vectors, bounds, reference).input()?;
    let output = HypervolumeOutput {
        selection: args.select.clone(),
        selected: selected.len(),
        report,
    };
    if args.json {
        return print_json(&output);
    }
    let r = &output.report;
    println!("selection: {} ({} records)", output.selection, output.selected);
    println!("raw volume: {:.6}", r.raw_volume);
    println!("hypervolume: {:.2}%", r.percent);
    println!("reference point: {:?}", r.reference_point);
    if let Some(b) = &r.normalization_bounds {
        println!(
            "bounds: correctness [{}, {}], perf_gain [{}, {}], runtime [{}, {}] s",
            b.correctness.0, b.correctness.1, b.perf_gain.0, b.perf_gain.1, b.runtime.0, b.runtime.1
        );
    }
    println!("convention: {}", r.convention);
    Ok(())
}

// importance -----------------------------------------------------------------

pub fn importance(args: ImportanceArgs) -> CmdResult {
    let ledger = open_ledger(&args.ledger)?;
    let space = match &args.space.space {
        Some(_) => load_space(&args.space, None)?,
        None => ledger.header().space.clone(),
    };
    let objectives: Vec<Objective> = if args.objective == "all" {
        Objective::ALL.to_vec()
    } else {
        vec![args.objective.parse::<Objective>().map_err(input_error)?]
    };
    let params = ForestParams {
        n_trees: args.trees,
        max_features: args.max_features,
        min_samples_leaf: args.min_leaf,
        seed: args.forest_seed,
    };
    let mut reports: Vec<ImportanceReport> = Vec::new();
    for objective in objectives {
        let report = importance_report(&space, ledger.records(), objective, &params).map_err(|e| match e {
            AnalysisError::TooFewSamples(_) | AnalysisError::BadForestParams => Failure::Input(e.into()),
            other => Failure::Environment(other.into()),
        })?;
        if report.constant_target {
            eprintln!(
                "warning: {} is constant across {} records; importances are all zero",
                objective.as_str(),
                report.sample_count
            );
        }
        reports.push(report);
    }
    if args.json {
        return print_json(&reports);
    }
    if args.csv {
        return write_importance_csv(&reports, std::io::stdout().lock()).environment();
    }
    println!(
        "feature importance (mean decrease in impurity, {} trees, {} records)",
        params.n_trees, reports[0].sample_count
    );
    print!("{}", render_importance(&reports));
    Ok(())
}

// significance ---------------------------------------------------------------

#[derive(Serialize)]
struct SignificanceOutput {
    #[serde(flatten)]
    test: UTestResult,
    alpha: f64,
    significant: bool,
    base_mean: f64,
    patched_mean: f64,
    gain_pct: f64,
}

fn read_samples(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    parse_numbers(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .input()
}

pub fn significance(args: SignificanceArgs) -> CmdResult {
    let base = read_samples(&args.base)?;
    let patched = read_samples(&args.patched)?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(input_error(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let test = mann_whitney_u(&base, &patched).input()?;
    let gain_pct = if base.len() >= 2 && patched.len() >= 2 {
        significant_gain(&base, &patched, args.alpha).input()?
    } else {
        0.0
    };
    let output = SignificanceOutput {
        significant: test.p_value < args.alpha,
        alpha: args.alpha,
        base_mean: mean(&base),
        patched_mean: mean(&patched),
        gain_pct,
        test,
    };
    if args.json {
        return print_json(&output);
    }
    println!("n1 = {}, n2 = {}", output.test.n1, output.test.n2);
    println!("U = {}", output.test.u_statistic);
    println!("p = {:.6} ({:?})", output.test.p_value, output.test.method);
    println!(
        "means: base {:.6}, patched {:.6}; significant at {}: {}",
        output.base_mean, output.patched_mean, output.alpha, output.significant
    );
    println!("credited speedup of patched over base: {:.2}%", output.gain_pct);
    Ok(())
}

// validate -------------------------------------------------------------------

#[derive(Serialize)]
struct ValidationOutput {
    instances: Vec<String>,
    rows: Vec<ReportRow>,
    /// Hypervolume of the re-evaluated front members together.
    front_hypervolume: Option<f64>,
}

fn evaluate_all(
    evaluator: &dyn Evaluator,
    configs: &[Configuration],
    instances: &[String],
    workers: usize,
) -> Vec<EvaluationRecord> {
    let run = |c: &Configuration| evaluate_record(evaluator, c, instances, 0, DEFAULT_PENALTY_RUNTIME, true);
    if workers <= 1 || !evaluator.concurrent_safe() {
        return configs.iter().map(run).collect();
    }
    let chunk = configs.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(run).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    })
}

pub fn validate(args: ValidateArgs) -> CmdResult {
    let ledger = open_ledger(&args.ledger)?;
    let space = match &args.space.space {
        Some(_) => load_space(&args.space, None)?,
        None => ledger.header().space.clone(),
    };
    let instances = resolve_instances(&args.instances, &[])?;
    let setup = build_evaluator(&args.evaluator, &RunManifest::default(), &space)?;

    let pool = candidates(ledger.records());
    if pool.is_empty() {
        return Err(input_error("ledger has no successful non-baseline records"));
    }
    let mut originals = baselines(ledger.records());
    let n_baseline = originals.len();
    originals.extend(pareto_front(&pool).input()?.members);

    let configs: Vec<Configuration> = originals.iter().map(|r| r.configuration.clone()).collect();
    let mut rerun = evaluate_all(setup.evaluator.as_ref(), &configs, &instances, args.parallel_evals.unwrap_or(1));
    for (new, old) in rerun.iter_mut().zip(&originals) {
        new.label = old.label.clone();
        if let Some(reason) = &new.failure {
            eprintln!("warning: {} failed on the held-out instances: {reason}", old.display_name());
        }
    }
    let bounds = table_bounds(&rerun);
    let members: Vec<ObjectiveVector> = rerun[n_baseline..]
        .iter()
        .filter(|r| r.status == Status::Ok)
        .map(|r| r.objectives)
        .collect();
    let front_hypervolume = match bounds {
        Some(b) if !members.is_empty() => hypervolume_of(&members, Some(b), DEFAULT_REFERENCE).ok().map(|h| h.percent),
        _ => None,
    };
    let output = ValidationOutput {
        rows: report_rows(&space, &rerun, bounds),
        instances,
        front_hypervolume,
    };
    if args.json {
        return print_json(&output);
    }
    println!("held-out instances: {}", output.instances.join(", "));
    println!("HV (%) column: validation hypervolume of each configuration alone");
    print!("{}", render_rows(&space, &output.rows));
    if let Some(hv) = output.front_hypervolume {
        println!("front validation hypervolume: {hv:.2}%");
    }
    Ok(())
}

// evaluate -------------------------------------------------------------------

#[derive(Serialize)]
struct EvaluateOutput {
    config: ConfigDocument,
    objectives: ObjectiveVector,
    correctness_fraction: String,
    per_instance: Vec<InstanceResult>,
}

pub fn evaluate(args: EvaluateArgs) -> CmdResult {
    let space = load_space(&args.space, None)?;
    let (config, _) = read_config(&args.config, &space, false)?;
    let setup = build_evaluator(&args.evaluator, &RunManifest::default(), &space)?;
    let instances = resolve_instances(&args.instances, &setup.default_instances)?;
    let results = setup
        .evaluator
        .evaluate(&config, &instances)
        .with_context(|| format!("evaluating {}", config.id))
        .environment()?;
    let objectives = aggregate_with_alpha(&results, args.alpha).environment()?;
    let passed = results.iter().filter(|r| r.passed).count();
    let output = EvaluateOutput {
        config: ConfigDocument::from(&config),
        objectives,
        correctness_fraction: format!("{passed}/{}", results.len()),
        per_instance: results,
    };
    if args.json {
        return print_json(&output);
    }
    println!("configuration {}", config.id);
    println!("correctness: {} ({:.4})", output.correctness_fraction, objectives.correctness);
    println!("perf gain: {:.2}%", objectives.perf_gain);
    println!("runtime: {:.1} s", objectives.runtime);
    for r in &output.per_instance {
        let gain = r.gain(args.alpha).unwrap_or(0.0);
        let verdict = if r.passed { "pass" } else { "fail" };
        println!("  {}: {verdict}, agent {:.1} s, gain {gain:.2}%", r.instance_id, r.agent_runtime);
    }
    Ok(())
}

// import-trace ---------------------------------------------------------------

pub fn import_trace(args: ImportTraceArgs) -> CmdResult {
    let space = load_space(&args.space, None)?;
    let trace = match &args.trace {
        None => ReplayTrace::bundled(),
        Some(p) => ReplayTrace::load(p, &space)
            .with_context(|| format!("loading trace {}", p.display()))
            .environment()?,
    };
    if args.ledger.exists() {
        return Err(input_error(format!("ledger {} already exists", args.ledger.display())));
    }
    let instances: Vec<String> = trace
        .entries()
        .first()
        .map(|e| e.results.iter().map(|r| r.instance_id.clone()).collect())
        .unwrap_or_default();
    let evaluator = ReplayEvaluator::new(trace);
    let header = LedgerHeader::new(&space, None, &evaluator.label(), &instances, &now());
    let mut ledger = RunLedger::create(&args.ledger, header).environment()?;
    let records = evaluator.records();
    for r in &records {
        if let Some(reason) = &r.failure {
            return Err(Failure::Environment(anyhow!("trace row {} is unusable: {reason}", r.display_name())));
        }
        ledger.append(r).environment()?;
    }
    println!("wrote {} records to {}", records.len(), args.ledger.display());
    Ok(())
}

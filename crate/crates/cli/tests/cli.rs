use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn agenttune(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agenttune"))
        .current_dir(dir)
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn record_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

fn imported_table(dir: &TempDir) -> &'static str {
    let out = agenttune(dir.path(), &["import-trace", "--ledger", "table.jsonl"]);
    assert!(out.status.success(), "{}", stderr(&out));
    "table.jsonl"
}

const ONE_ROW_TRACE: &str = r#"[
  {"label": "only", "config": {"values": {"temperature": 0.692, "top_p": 0.384, "max_tokens": 2972,
    "step_limit": 38, "cost_limit": 6.73, "env_timeout": 40, "llm_timeout": 56, "prompt_template": 3}},
   "results": [{"instance_id": "t1", "passed": true, "agent_runtime_s": 1500.0},
               {"instance_id": "t2", "passed": false, "agent_runtime_s": 1500.0}]}
]"#;

#[test]
fn synthetic_optimize_stays_within_budget() {
    let dir = TempDir::new().unwrap();
    let out = agenttune(
        dir.path(),
        &["optimize", "--ledger", "run.jsonl", "--seed", "42", "--instances", "a,b,c", "--json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = json(&out);
    assert!(summary["records_in_ledger"].as_u64().unwrap() <= 30);
    assert_eq!(record_lines(&dir.path().join("run.jsonl")) as u64, summary["records_in_ledger"].as_u64().unwrap());
    assert_eq!(summary["per_generation_hypervolume"].as_array().unwrap().len(), 6);
    assert!(!summary["pareto"].as_array().unwrap().is_empty());
}

#[test]
fn reproducible_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = agenttune(
            dir.path(),
            &["optimize", "--ledger", name, "--seed", "3", "--instances", "x", "--reproducible"],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn existing_ledger_needs_resume() {
    let dir = TempDir::new().unwrap();
    let args = ["optimize", "--ledger", "run.jsonl", "--instances", "a", "--stop-after", "1"];
    assert!(agenttune(dir.path(), &args).status.success());
    let again = agenttune(dir.path(), &args);
    assert_eq!(again.status.code(), Some(2));
    let resumed = agenttune(dir.path(), &["optimize", "--ledger", "run.jsonl", "--resume", "--json"]);
    assert!(resumed.status.success(), "{}", stderr(&resumed));
    assert_eq!(json(&resumed)["complete"], Value::Bool(true));
}

#[test]
fn missing_trace_is_an_environment_failure() {
    let dir = TempDir::new().unwrap();
    let out = agenttune(
        dir.path(),
        &["optimize", "--ledger", "run.jsonl", "--evaluator", "replay", "--trace", "missing.json"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(!dir.path().join("run.jsonl").exists());
}

#[test]
fn replay_outside_the_trace_records_failures() {
    let dir = TempDir::new().unwrap();
    let out = agenttune(dir.path(), &["optimize", "--ledger", "run.jsonl", "--evaluator", "replay", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("run.jsonl")).unwrap();
    let failed = text.lines().skip(1).filter(|l| l.contains("\"failed\"")).count();
    assert!(failed > 0);
    assert_eq!(json(&out)["complete"], Value::Bool(true));
}

#[test]
fn pareto_of_the_imported_table() {
    let dir = TempDir::new().unwrap();
    let ledger = imported_table(&dir);
    let out = agenttune(dir.path(), &["pareto", "--ledger", ledger, "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    let mut labels: Vec<&str> = v["members"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["config"].as_str().unwrap())
        .collect();
    labels.sort_unstable();
    assert_eq!(labels, ["#15", "#16", "#4", "#5", "#9"]);
    assert_eq!(v["baseline"]["config"], "default");
    assert_eq!(v["members_dominating_baseline"], 4);

    let csv = agenttune(dir.path(), &["pareto", "--ledger", ledger, "--csv"]);
    assert_eq!(stdout(&csv).lines().count(), 6);
}

#[test]
fn single_record_ledger() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("one.json"), ONE_ROW_TRACE).unwrap();
    let out = agenttune(dir.path(), &["import-trace", "--trace", "one.json", "--ledger", "one.jsonl"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let pareto = agenttune(dir.path(), &["pareto", "--ledger", "one.jsonl", "--json"]);
    assert!(pareto.status.success(), "{}", stderr(&pareto));
    assert_eq!(json(&pareto)["members"].as_array().unwrap().len(), 1);

    let hv = agenttune(dir.path(), &["hypervolume", "--ledger", "one.jsonl", "--json"]);
    assert!(hv.status.success(), "{}", stderr(&hv));
    assert_eq!(json(&hv)["percent"].as_f64().unwrap(), 100.0);

    let imp = agenttune(dir.path(), &["importance", "--ledger", "one.jsonl"]);
    assert_eq!(imp.status.code(), Some(2));
    assert!(stderr(&imp).contains("too few records"), "{}", stderr(&imp));
}

#[test]
fn hypervolume_selections() {
    let dir = TempDir::new().unwrap();
    let ledger = imported_table(&dir);
    let percent = |select: &str| {
        let out = agenttune(dir.path(), &["hypervolume", "--ledger", ledger, "--select", select, "--json"]);
        assert!(out.status.success(), "{}", stderr(&out));
        json(&out)["percent"].as_f64().unwrap()
    };
    let all = percent("all");
    assert!(all >= percent("baseline"));
    assert!(all >= percent("label:#5"));
    assert!((all - percent("front")).abs() < 1e-9);

    let out = agenttune(
        dir.path(),
        &["hypervolume", "--ledger", ledger, "--bounds", "0,1,0,20,500,2000", "--json"],
    );
    let v = json(&out);
    assert_eq!(v["normalization_bounds"]["perf_gain"], serde_json::json!([0.0, 20.0]));
    assert_eq!(v["normalization_bounds"]["runtime"], serde_json::json!([500.0, 2000.0]));

    let empty = agenttune(dir.path(), &["hypervolume", "--ledger", ledger, "--select", "label:nope"]);
    assert_eq!(empty.status.code(), Some(2));
    let bad = agenttune(dir.path(), &["hypervolume", "--ledger", ledger, "--bounds", "1,2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn importance_on_a_synthetic_run() {
    let dir = TempDir::new().unwrap();
    let run = agenttune(dir.path(), &["optimize", "--ledger", "run.jsonl", "--instances", "a"]);
    assert!(run.status.success());
    let out = agenttune(
        dir.path(),
        &["importance", "--ledger", "run.jsonl", "--objective", "runtime", "--trees", "40", "--json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let reports = json(&out);
    let total: f64 = reports[0]["importances"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn validate_requires_held_out_instances() {
    let dir = TempDir::new().unwrap();
    let ledger = imported_table(&dir);
    let out = agenttune(dir.path(), &["validate", "--ledger", ledger, "--instances", ""]);
    assert_eq!(out.status.code(), Some(2));

    let ok = agenttune(
        dir.path(),
        &["validate", "--ledger", ledger, "--evaluator", "replay", "--instances", "test-1", "--json"],
    );
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert_eq!(json(&ok)["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn significance_of_two_samples() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("base.txt"), "10 11 12 13 14").unwrap();
    std::fs::write(dir.path().join("patched.json"), "[5, 6, 7, 8, 9]").unwrap();
    let out = agenttune(
        dir.path(),
        &["significance", "--base", "base.txt", "--patched", "patched.json", "--json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["u_statistic"].as_f64().unwrap(), 0.0);
    assert!((v["p_value"].as_f64().unwrap() - 2.0 / 252.0).abs() < 1e-12);
    assert_eq!(v["significant"], Value::Bool(true));
    assert!((v["gain_pct"].as_f64().unwrap() - 100.0 * 5.0 / 12.0).abs() < 1e-9);
}

#[test]
fn evaluate_a_configuration() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"values": {"temperature": 0.65, "top_p": 0.4, "max_tokens": 2048, "step_limit": 30,
            "cost_limit": 3.0, "env_timeout": 60, "llm_timeout": 60, "prompt_template": 3}}"#,
    )
    .unwrap();
    let out = agenttune(dir.path(), &["evaluate", "--config", "cfg.json", "--instances", "a,b", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["per_instance"].as_array().unwrap().len(), 2);

    std::fs::write(dir.path().join("bad.json"), r#"{"values": {"temperature": 7.0}}"#).unwrap();
    let bad = agenttune(dir.path(), &["evaluate", "--config", "bad.json", "--instances", "a"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn flags_override_environment() {
    let dir = TempDir::new().unwrap();
    let run = |extra: &[&str], envs: &[(&str, &str)]| {
        let mut args = vec!["optimize", "--json", "--stop-after", "0"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_agenttune"))
            .current_dir(dir.path())
            .args(&args)
            .env_clear()
            .envs(envs.iter().copied())
            .output()
            .unwrap()
    };
    let env = [
        ("AGENTTUNE_LEDGER", "env.jsonl"),
        ("AGENTTUNE_POP", "4"),
        ("AGENTTUNE_INSTANCES", "a,b"),
    ];
    let from_env = run(&[], &env);
    assert!(from_env.status.success(), "{}", stderr(&from_env));
    assert_eq!(json(&from_env)["ga_params"]["population_size"], 4);
    assert!(dir.path().join("env.jsonl").exists());

    let flagged = run(&["--pop", "6", "--ledger", "flag.jsonl"], &env);
    assert!(flagged.status.success(), "{}", stderr(&flagged));
    assert_eq!(json(&flagged)["ga_params"]["population_size"], 6);
    assert!(dir.path().join("flag.jsonl").exists());
}

#[test]
fn manifest_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"ledger": "m.jsonl", "instances": ["i1"], "ga_params": {"generations": 2}, "report_dir": "out"}"#,
    )
    .unwrap();
    let out = agenttune(dir.path(), &["optimize", "--manifest", "run.json", "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["ga_params"]["generations"], 2);
    for f in ["m.jsonl", "out/pareto.csv", "out/records.csv", "out/summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    std::fs::write(dir.path().join("typo.json"), r#"{"ledgr": "x.jsonl"}"#).unwrap();
    let typo = agenttune(dir.path(), &["optimize", "--manifest", "typo.json"]);
    assert_eq!(typo.status.code(), Some(2));
}

#[test]
fn baseline_is_stored_once() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("base.json"),
        r#"{"label": "stock", "values": {"temperature": 0.0, "top_p": 1.0, "max_tokens": 4096,
            "step_limit": 240, "cost_limit": 3.0, "env_timeout": 60, "llm_timeout": 60}}"#,
    )
    .unwrap();
    let args = ["optimize", "--ledger", "b.jsonl", "--instances", "a", "--baseline", "base.json", "--json"];
    let out = agenttune(dir.path(), &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["baseline"][0]["config"], "stock");
    let text = std::fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(text.matches("\"stock\"").count(), 1);
}

//! Tabular views of evaluation records and importance reports, as aligned
//! text and CSV.

use std::fmt::Write as _;
use std::io;

use indexmap::IndexMap;
use serde::Serialize;

use crate::analysis::ImportanceReport;
use crate::evaluation::{EvaluationRecord, Objective, Status};
use crate::metrics::{hypervolume_of, NormBounds, DEFAULT_REFERENCE};
use crate::space::{names, ConfigSpace};

/// Short column header for a parameter.
pub fn column_header(name: &str) -> &str {
    match name {
        names::TEMPERATURE => "Temp",
        names::TOP_P => "TopP",
        names::MAX_TOKENS => "Token",
        names::STEP_LIMIT => "Step",
        names::COST_LIMIT => "Cost",
        names::ENV_TIMEOUT => "ETi",
        names::LLM_TIMEOUT => "LTi",
        names::PROMPT_TEMPLATE => "Pr",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub config: String,
    pub id: String,
    /// Rendered parameter values keyed by parameter name; `None` when the
    /// record does not set the parameter.
    pub values: IndexMap<String, Option<String>>,
    pub correctness: f64,
    pub correctness_fraction: String,
    pub perf_gain: f64,
    pub runtime: f64,
    /// Hypervolume percent of this record alone under the shared bounds.
    pub hypervolume: Option<f64>,
    pub baseline: bool,
    pub failed: bool,
}

/// One row per record. Per-row hypervolume uses `bounds`, or the bounds
/// induced by all given records when `None`; it is left empty for records
/// that fall below the reference point under those bounds.
pub fn report_rows(space: &ConfigSpace, records: &[EvaluationRecord], bounds: Option<NormBounds>) -> Vec<ReportRow> {
    let vectors: Vec<_> = records.iter().map(|r| r.objectives).collect();
    let bounds = match bounds {
        Some(b) => Some(b),
        None => NormBounds::induced(&vectors),
    };
    records
        .iter()
        .map(|r| {
            let values = space
                .params()
                .iter()
                .map(|p| (p.name.clone(), r.configuration.get(&p.name).map(ToString::to_string)))
                .collect();
            let hypervolume =
                bounds.and_then(|b| hypervolume_of(&[r.objectives], Some(b), DEFAULT_REFERENCE).ok().map(|h| h.percent));
            ReportRow {
                config: r.display_name(),
                id: r.configuration.id.to_string(),
                values,
                correctness: r.objectives.correctness,
                correctness_fraction: r.correctness_fraction(),
                perf_gain: r.objectives.perf_gain,
                runtime: r.objectives.runtime,
                hypervolume,
                baseline: r.is_baseline(),
                failed: r.status == Status::Failed,
            }
        })
        .collect()
}

fn headers(space: &ConfigSpace) -> Vec<String> {
    let mut h = vec!["Config".to_string()];
    h.extend(space.params().iter().map(|p| column_header(&p.name).to_string()));
    h.extend(["Corr", "Perf (%)", "RT (s)", "HV (%)"].map(String::from));
    h
}

fn cells(row: &ReportRow) -> Vec<String> {
    let mut c = vec![row.config.clone()];
    c.extend(row.values.values().map(|v| v.clone().unwrap_or_else(|| "-".into())));
    c.push(row.correctness_fraction.clone());
    c.push(format!("{:.2}", row.perf_gain));
    c.push(format!("{:.1}", row.runtime));
    c.push(row.hypervolume.map_or_else(|| "-".into(), |v| format!("{v:.2}")));
    c
}

fn align(table: &[Vec<String>]) -> String {
    let width = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..width)
        .map(|j| table.iter().filter_map(|r| r.get(j)).map(|c| c.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in table {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

pub fn render_rows(space: &ConfigSpace, rows: &[ReportRow]) -> String {
    let mut table = vec![headers(space)];
    table.extend(rows.iter().map(cells));
    align(&table)
}

pub fn write_rows_csv<W: io::Write>(space: &ConfigSpace, rows: &[ReportRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers(space))?;
    for row in rows {
        w.write_record(cells(row))?;
    }
    w.flush()?;
    Ok(())
}

fn importance_columns(reports: &[ImportanceReport]) -> (Vec<String>, Vec<Vec<String>>) {
    let header_for = |o: Objective| match o {
        Objective::Correctness => "Correctness",
        Objective::PerfGain => "Performance",
        Objective::Runtime => "Runtime",
    };
    let mut header = vec!["Hyperparameter".to_string()];
    header.extend(reports.iter().map(|r| header_for(r.objective).to_string()));
    let names: Vec<&String> = reports.first().map(|r| r.importances.keys().collect()).unwrap_or_default();
    let rows = names
        .into_iter()
        .map(|name| {
            let mut row = vec![name.clone()];
            row.extend(
                reports
                    .iter()
                    .map(|r| r.importances.get(name).map_or_else(|| "-".into(), |v| format!("{v:.3}"))),
            );
            row
        })
        .collect();
    (header, rows)
}

/// Rows are hyperparameters, columns the objectives of `reports`.
pub fn render_importance(reports: &[ImportanceReport]) -> String {
    let (header, rows) = importance_columns(reports);
    let mut table = vec![header];
    table.extend(rows);
    align(&table)
}

pub fn write_importance_csv<W: io::Write>(reports: &[ImportanceReport], out: W) -> csv::Result<()> {
    let (header, rows) = importance_columns(reports);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

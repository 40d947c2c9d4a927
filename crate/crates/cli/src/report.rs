use std::fmt::Write;
use std::path::Path;

use oppnet::metrics::{fmt6, median_finish, TrialMetrics};
use serde::Deserialize;

use crate::run::MANIFEST;
use crate::CliError;

#[derive(Deserialize)]
struct Cell {
    strategy: String,
    seeding: String,
    dir: String,
}

#[derive(Deserialize)]
struct Manifest {
    cells: Vec<Cell>,
}

#[derive(Deserialize)]
struct FinishRow {
    finish_time: Option<f64>,
    truncated: u8,
}

/// Per-trial network finish times as read back from `finish.csv`.
fn read_finish(path: &Path) -> Result<Vec<TrialMetrics>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    r.deserialize::<FinishRow>()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            Ok(TrialMetrics {
                finish_times: vec![row.finish_time],
                truncated: row.truncated != 0,
                ..TrialMetrics::default()
            })
        })
        .collect()
}

fn cell_text(trials: &[TrialMetrics]) -> String {
    let truncated = trials.iter().any(|t| t.truncated);
    let mark = if truncated { "*" } else { "" };
    match median_finish(trials) {
        Ok(s) => format!("{}({}){mark}", fmt6(s.median), fmt6(s.stddev)),
        Err(_) => format!("-{mark}"),
    }
}

fn unique(items: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Median(std) network finish-time table: one row per seeding, one column
/// per strategy. `*` marks cells with truncated trials.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(CliError::Report(format!("{}: no {MANIFEST}; not a run directory", dir.display())));
    }
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Report(format!("{}: {e}", manifest_path.display())))?;
    if manifest.cells.is_empty() {
        return Err(CliError::Report(format!("{}: manifest lists no cells", dir.display())));
    }

    let mut missing = Vec::new();
    let mut table = Vec::new();
    for cell in &manifest.cells {
        match read_finish(&dir.join(&cell.dir).join("finish.csv")) {
            Ok(trials) if !trials.is_empty() => table.push((cell, cell_text(&trials))),
            _ => missing.push(cell.dir.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Report(format!("missing cell outputs: {}", missing.join(", "))));
    }

    let strategies = unique(manifest.cells.iter().map(|c| c.strategy.clone()));
    let seedings = unique(manifest.cells.iter().map(|c| c.seeding.clone()));
    let lookup = |seeding: &str, strategy: &str| {
        table
            .iter()
            .find(|(c, _)| c.seeding == seeding && c.strategy == strategy)
            .map_or("", |(_, s)| s.as_str())
    };
    let first = seedings.iter().map(String::len).max().unwrap_or(0).max("seeding".len());
    let widths: Vec<usize> = strategies
        .iter()
        .map(|st| seedings.iter().map(|se| lookup(se, st).len()).max().unwrap_or(0).max(st.len()))
        .collect();

    let mut out = String::new();
    write!(out, "{:<first$}", "seeding").unwrap();
    for (st, w) in strategies.iter().zip(&widths) {
        write!(out, "  {st:>w$}").unwrap();
    }
    out.push('\n');
    for se in &seedings {
        write!(out, "{se:<first$}").unwrap();
        for (st, w) in strategies.iter().zip(&widths) {
            write!(out, "  {:>w$}", lookup(se, st)).unwrap();
        }
        out.push('\n');
    }
    if table.iter().any(|(_, s)| s.ends_with('*')) {
        out.push_str("* includes truncated trials\n");
    }
    Ok(out)
}

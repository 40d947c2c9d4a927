use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use oppnet::engine::{run_experiment, trial_plan, ExperimentResult, ExperimentSpec};
use oppnet::graph::{generate, load_graph, save_graph, ContactGraph};
use oppnet::metrics::*;
use oppnet::seeding::{SeedingPlan, SeedingScheme};
use oppnet::strategies::StrategyKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, GraphSource};
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

pub fn cell_name(kind: StrategyKind, seeding: SeedingScheme) -> String {
    format!("{kind}__{seeding}")
}

#[derive(Serialize)]
struct CellRecord {
    strategy: String,
    seeding: String,
    dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_sim_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct PlanRecord<'a> {
    seed: u64,
    plan: &'a SeedingPlan,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    graph: oppnet::graph::GraphStats,
    seeds: Vec<u64>,
    plans: Vec<String>,
    cells: Vec<CellRecord>,
    created_unix: u64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load(cfg: &ExperimentConfig) -> Result<ContactGraph, CliError> {
    match &cfg.graph {
        GraphSource::File(p) => load_graph(p).map_err(|e| CliError::Graph(format!("{}: {e}", p.display()))),
        GraphSource::Generate(params) => generate(params)
            .map(|(g, _)| g)
            .map_err(|e| CliError::Graph(format!("generation failed: {e}"))),
    }
}

/// Writes `bytes` next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn write_cell(dir: &Path, r: &ExperimentResult, g: &ContactGraph, grid: &[f64]) -> Result<(), CliError> {
    let tmp = dir.with_file_name(format!(".{}.tmp", dir.file_name().unwrap().to_string_lossy()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
    let m = |e: MetricsError| CliError::Io(format!("{}: {e}", tmp.display()));
    let curve = latency_curve(&r.trials, grid).map_err(m)?;
    write_latency_csv(&curve, tmp.join("latency.csv")).map_err(m)?;
    write_finish_csv(&r.trials, tmp.join("finish.csv")).map_err(m)?;
    write_transmissions_csv(&r.trials, tmp.join("transmissions.csv")).map_err(m)?;
    write_per_node_csv(&r.trials, g, tmp.join("per_node.csv")).map_err(m)?;
    write_user_finish_csv(&r.trials, g, tmp.join("users.csv")).map_err(m)?;
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::rename(&tmp, dir).map_err(|e| io_err(dir, e))
}

fn write_plans(cfg: &ExperimentConfig, g: &ContactGraph, out: &Path, seeds: &[u64]) -> Result<Vec<String>, CliError> {
    let dir = out.join("plans");
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut files = Vec::new();
    for &seeding in &cfg.seedings {
        let mut spec = ExperimentSpec::new(g, cfg.strategies[0], seeding, cfg.k);
        spec.packet_size = cfg.packet_size;
        let plans = seeds
            .iter()
            .map(|&s| trial_plan(&spec.trial(s, 1.0)).map_err(|e| CliError::Cell(format!("{seeding}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let records: Vec<PlanRecord> = seeds.iter().zip(&plans).map(|(&seed, plan)| PlanRecord { seed, plan }).collect();
        let name = format!("plans/{seeding}.json");
        let json = serde_json::to_vec(&records).map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(&out.join(&name), &json)?;
        files.push(name);
    }
    Ok(files)
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = load(cfg)?;
    let out = PathBuf::from(&cfg.out);
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;

    let cells: Vec<(StrategyKind, SeedingScheme)> = cfg
        .seedings
        .iter()
        .flat_map(|&s| cfg.strategies.iter().map(move |&k| (k, s)))
        .collect();
    let results: Vec<Result<ExperimentResult, String>> = cells
        .par_iter()
        .map(|&(kind, seeding)| {
            let mut spec = ExperimentSpec::new(&g, kind, seeding, cfg.k);
            spec.packet_size = cfg.packet_size;
            spec.failure = cfg.failure;
            spec.base_seed = cfg.base_seed;
            spec.n_trials = cfg.n_trials;
            spec.horizon = cfg.max_sim_time;
            run_experiment(&spec).map_err(|e| e.to_string())
        })
        .collect();

    let auto_end = results
        .iter()
        .flatten()
        .flat_map(|r| r.trials.iter().map(|t| t.network_finish().unwrap_or(t.end_time)))
        .fold(0.0, f64::max);
    let grid = cfg.time_grid.points(if auto_end > 0.0 { auto_end } else { 1.0 });

    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (&(kind, seeding), result) in cells.iter().zip(&results) {
        let name = cell_name(kind, seeding);
        let outcome = result
            .as_ref()
            .map_err(|e| e.clone())
            .and_then(|r| write_cell(&out.join(&name), r, &g, &grid).map(|_| r).map_err(|e| e.to_string()));
        match outcome {
            Ok(r) => {
                let line = match median_finish(&r.trials) {
                    Ok(s) => format!("median {} (std {}), {} truncated", fmt6(s.median), fmt6(s.stddev), s.truncated),
                    Err(e) => e.to_string(),
                };
                println!("{name}: {line}");
                records.push(CellRecord {
                    strategy: kind.to_string(),
                    seeding: seeding.to_string(),
                    dir: name,
                    max_sim_time: Some(r.max_sim_time),
                    error: None,
                });
            }
            Err(e) => {
                eprintln!("{name}: failed: {e}");
                failed.push(format!("{name}: {e}"));
                records.push(CellRecord {
                    strategy: kind.to_string(),
                    seeding: seeding.to_string(),
                    dir: name,
                    max_sim_time: None,
                    error: Some(e),
                });
            }
        }
    }

    let seeds: Vec<u64> = (0..cfg.n_trials as u64).map(|i| cfg.base_seed.wrapping_add(i)).collect();
    let plans = write_plans(cfg, &g, &out, &seeds)?;
    save_graph(&g, out.join("graph.txt")).map_err(|e| CliError::Io(e.to_string()))?;
    let manifest = Manifest {
        config: cfg,
        graph: g.stats(),
        seeds,
        plans,
        cells: records,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(&out.join(MANIFEST), &json)?;

    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Cell(format!("{} of {} cells failed: {}", failed.len(), cells.len(), failed.join("; "))))
    }
}

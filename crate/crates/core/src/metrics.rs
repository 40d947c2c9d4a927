//! Trial records, aggregate metrics and their CSV forms.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ContactGraph, NodeId};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("no trials to aggregate")]
    NoTrials,
    #[error("all {0} trials were truncated")]
    AllTruncated(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTally {
    pub sent: u64,
    pub received: u64,
    pub noninnovative_received: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub seed: u64,
    /// `None` for nodes that never finished or died.
    pub finish_times: Vec<Option<f64>>,
    pub meetings_total: u64,
    pub transmissions_total: u64,
    pub innovative_total: u64,
    pub noninnovative_total: u64,
    pub per_node: Vec<NodeTally>,
    /// Useful content per node right after seeding (distinct packets or rank).
    pub seeded_per_node: Vec<usize>,
    pub failures: Vec<(f64, NodeId)>,
    pub end_time: f64,
    pub truncated: bool,
}

impl TrialMetrics {
    pub fn n(&self) -> usize {
        self.finish_times.len()
    }

    pub fn seeded_total(&self) -> usize {
        self.seeded_per_node.iter().sum()
    }

    /// Time at which the last node finished, if the trial completed.
    pub fn network_finish(&self) -> Option<f64> {
        if self.truncated {
            return None;
        }
        self.finish_times.iter().flatten().copied().fold(None, |m, t| Some(m.map_or(t, |m: f64| m.max(t))))
    }

    /// Percentage of all nodes holding the file at time `t`.
    pub fn percent_complete(&self, t: f64) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        let done = self.finish_times.iter().filter(|f| f.is_some_and(|f| f <= t)).count();
        100.0 * done as f64 / self.n() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyCurve {
    pub t: Vec<f64>,
    pub percent: Vec<f64>,
}

pub fn latency_curve(trials: &[TrialMetrics], grid: &[f64]) -> Result<LatencyCurve, MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    if trials.is_empty() {
        return Err(MetricsError::NoTrials);
    }
    let percent = grid
        .iter()
        .map(|&t| trials.iter().map(|tr| tr.percent_complete(t)).sum::<f64>() / trials.len() as f64)
        .collect();
    Ok(LatencyCurve {
        t: grid.to_vec(),
        percent,
    })
}

/// `steps + 1` evenly spaced points on `[0, end]`.
pub fn uniform_grid(end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| end * i as f64 / steps as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinishSummary {
    pub median: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub trials_used: usize,
    pub truncated: usize,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median and spread of network finish times over untruncated trials.
pub fn median_finish(trials: &[TrialMetrics]) -> Result<FinishSummary, MetricsError> {
    if trials.is_empty() {
        return Err(MetricsError::NoTrials);
    }
    let mut times: Vec<f64> = trials.iter().filter_map(TrialMetrics::network_finish).collect();
    if times.is_empty() {
        return Err(MetricsError::AllTruncated(trials.len()));
    }
    times.sort_by(f64::total_cmp);
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / times.len() as f64;
    Ok(FinishSummary {
        median: median(&times),
        stddev: var.sqrt(),
        trials_used: times.len(),
        truncated: trials.len() - times.len(),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSummary {
    pub trials: usize,
    pub truncated: usize,
    pub meetings: f64,
    pub transmissions: f64,
    pub innovative: f64,
    pub noninnovative: f64,
}

pub fn transmission_summary(trials: &[TrialMetrics]) -> TransmissionSummary {
    let n = trials.len().max(1) as f64;
    let mean = |f: fn(&TrialMetrics) -> u64| trials.iter().map(|t| f(t) as f64).sum::<f64>() / n;
    TransmissionSummary {
        trials: trials.len(),
        truncated: trials.iter().filter(|t| t.truncated).count(),
        meetings: mean(|t| t.meetings_total),
        transmissions: mean(|t| t.transmissions_total),
        innovative: mean(|t| t.innovative_total),
        noninnovative: mean(|t| t.noninnovative_total),
    }
}

/// Six significant digits, shortest form.
pub fn fmt6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_latency_csv(curve: &LatencyCurve, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "percent_complete"])?;
    for (t, p) in curve.t.iter().zip(&curve.percent) {
        w.write_record([fmt6(*t), fmt6(*p)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per trial; truncated trials have an empty finish time.
pub fn write_finish_csv(trials: &[TrialMetrics], path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["trial", "seed", "finish_time", "truncated"])?;
    for (i, t) in trials.iter().enumerate() {
        let finish = t.network_finish().map(fmt6).unwrap_or_default();
        w.write_record([i.to_string(), t.seed.to_string(), finish, (t.truncated as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_transmissions_csv(trials: &[TrialMetrics], path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "trial",
        "seed",
        "meetings",
        "transmissions",
        "innovative",
        "noninnovative",
        "seeded",
        "truncated",
    ])?;
    for (i, t) in trials.iter().enumerate() {
        w.write_record([
            i.to_string(),
            t.seed.to_string(),
            t.meetings_total.to_string(),
            t.transmissions_total.to_string(),
            t.innovative_total.to_string(),
            t.noninnovative_total.to_string(),
            t.seeded_total().to_string(),
            (t.truncated as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-node tallies averaged over trials.
pub fn write_per_node_csv(trials: &[TrialMetrics], g: &ContactGraph, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    if trials.is_empty() {
        return Err(MetricsError::NoTrials);
    }
    let n = trials.len() as f64;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "community", "sent", "received", "noninnovative"])?;
    for v in 0..g.n() {
        let avg = |f: fn(&NodeTally) -> u64| fmt6(trials.iter().map(|t| f(&t.per_node[v]) as f64).sum::<f64>() / n);
        w.write_record([
            v.to_string(),
            g.community_of(v).to_string(),
            avg(|x| x.sent),
            avg(|x| x.received),
            avg(|x| x.noninnovative_received),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean finish time per user, sorted by community then degree (descending).
pub fn write_user_finish_csv(trials: &[TrialMetrics], g: &ContactGraph, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let mut order: Vec<NodeId> = (0..g.n()).collect();
    order.sort_by_key(|&v| (g.community_of(v), std::cmp::Reverse(g.degree(v)), v));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "community", "degree", "mean_finish", "finished_trials"])?;
    for v in order {
        let done: Vec<f64> = trials.iter().filter_map(|t| t.finish_times[v]).collect();
        let mean = if done.is_empty() {
            String::new()
        } else {
            fmt6(done.iter().sum::<f64>() / done.len() as f64)
        };
        w.write_record([
            v.to_string(),
            g.community_of(v).to_string(),
            g.degree(v).to_string(),
            mean,
            done.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,percent_complete` file back.
pub fn read_latency_csv(path: impl AsRef<Path>) -> Result<LatencyCurve, MetricsError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut curve = LatencyCurve {
        t: Vec::new(),
        percent: Vec::new(),
    };
    for rec in r.deserialize() {
        let (t, p): (f64, f64) = rec?;
        curve.t.push(t);
        curve.percent.push(p);
    }
    Ok(curve)
}

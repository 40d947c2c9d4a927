//! Batches of independent trials for one (strategy, seeding) cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trial, EngineError, FailureModel, TrialConfig};
use crate::coding::SolitonParams;
use crate::graph::ContactGraph;
use crate::metrics::TrialMetrics;
use crate::seeding::SeedingScheme;
use crate::strategies::StrategyKind;

/// Horizon used when the pilot trial gives no usable finish time.
pub const AUTO_HORIZON_FALLBACK: f64 = 1e6;
const AUTO_HORIZON_FACTOR: f64 = 100.0;
const PILOT_CAP: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Fixed(f64),
    /// 100 times the network finish of a failure-free pilot trial.
    Auto,
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec<'g> {
    pub graph: &'g ContactGraph,
    pub strategy: StrategyKind,
    pub seeding: SeedingScheme,
    pub failure: FailureModel,
    pub k: usize,
    pub packet_size: usize,
    pub lt: Option<SolitonParams>,
    pub base_seed: u64,
    pub n_trials: usize,
    pub horizon: Horizon,
}

impl<'g> ExperimentSpec<'g> {
    pub fn new(graph: &'g ContactGraph, strategy: StrategyKind, seeding: SeedingScheme, k: usize) -> Self {
        Self {
            graph,
            strategy,
            seeding,
            failure: FailureModel::None,
            k,
            packet_size: 16,
            lt: None,
            base_seed: 0,
            n_trials: 1,
            horizon: Horizon::Auto,
        }
    }

    /// Trial configuration for seed `seed` under horizon `max_sim_time`.
    pub fn trial(&self, seed: u64, max_sim_time: f64) -> TrialConfig<'g> {
        TrialConfig {
            graph: self.graph,
            strategy: self.strategy,
            seeding: self.seeding,
            failure: self.failure,
            seed,
            max_sim_time,
            k: self.k,
            packet_size: self.packet_size,
            lt: self.lt,
            time_unit: "unit".into(),
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_trials as u64).map(|i| self.base_seed.wrapping_add(i)).collect()
    }

    pub fn resolve_horizon(&self) -> Result<f64, EngineError> {
        match self.horizon {
            Horizon::Fixed(t) if t > 0.0 && t.is_finite() => Ok(t),
            Horizon::Fixed(t) => Err(EngineError::InvalidConfig(format!("max_sim_time must be positive, got {t}"))),
            Horizon::Auto => {
                let mut pilot = self.trial(self.base_seed, PILOT_CAP);
                pilot.failure = FailureModel::None;
                let m = run_trial(&pilot)?;
                Ok(match m.network_finish() {
                    Some(t) if t > 0.0 => AUTO_HORIZON_FACTOR * t,
                    _ => AUTO_HORIZON_FALLBACK,
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub trials: Vec<TrialMetrics>,
    pub max_sim_time: f64,
    pub seeds: Vec<u64>,
}

/// Runs `n_trials` trials in parallel with seeds `base_seed + i`. Results
/// come back in seed order, so output does not depend on thread count.
pub fn run_experiment(spec: &ExperimentSpec<'_>) -> Result<ExperimentResult, EngineError> {
    if spec.n_trials == 0 {
        return Err(EngineError::InvalidConfig("need at least one trial".into()));
    }
    let max_sim_time = spec.resolve_horizon()?;
    let seeds = spec.seeds();
    let trials = seeds
        .par_iter()
        .map(|&s| run_trial(&spec.trial(s, max_sim_time)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResult {
        trials,
        max_sim_time,
        seeds,
    })
}

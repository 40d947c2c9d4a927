//! Discrete-event core: meeting clocks, trials, failures and experiments.

mod clock;
mod experiment;
mod trial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clock::{next_meeting_time, MeetingEvent, MeetingQueue};
pub use experiment::{run_experiment, ExperimentResult, ExperimentSpec, Horizon, AUTO_HORIZON_FALLBACK};
pub use trial::{apply_failure, run_trial, run_trial_logged, trial_plan};

use crate::coding::{CodingError, SolitonParams};
use crate::graph::ContactGraph;
use crate::seeding::{SeedingError, SeedingScheme};
use crate::strategies::StrategyKind;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("meeting rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("invalid trial configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Seeding(#[from] SeedingError),
    #[error("event log: {0}")]
    Log(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FailureModel {
    #[default]
    None,
    /// One uniformly random alive node dies at every multiple of `interval`.
    Periodic { interval: f64 },
    /// Each community's most central user dies once it has spread
    /// `ceil(fraction * k)` of its seeded packets.
    McuPartial { fraction: f64 },
}

impl FailureModel {
    pub fn validate(&self) -> Result<(), EngineError> {
        match *self {
            FailureModel::Periodic { interval } if !(interval > 0.0 && interval.is_finite()) => Err(
                EngineError::InvalidConfig(format!("failure interval must be positive, got {interval}")),
            ),
            FailureModel::McuPartial { fraction } if !(fraction > 0.0 && fraction < 1.0) => Err(
                EngineError::InvalidConfig(format!("mcu failure fraction must lie in (0,1), got {fraction}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FailureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureModel::None => f.write_str("none"),
            FailureModel::Periodic { interval } => write!(f, "periodic:{interval}"),
            FailureModel::McuPartial { fraction } => write!(f, "mcu_partial:{fraction}"),
        }
    }
}

impl FromStr for FailureModel {
    type Err = String;

    /// `none`, `periodic:<interval>`, `mcu_partial:<fraction>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, arg) = s.split_once(':').map_or((s, None), |(k, a)| (k.trim(), Some(a.trim())));
        let num = |a: Option<&str>| -> Result<f64, String> {
            a.ok_or_else(|| format!("failure model {kind:?} needs a value"))?
                .parse()
                .map_err(|_| format!("invalid failure parameter in {s:?}"))
        };
        let m = match kind {
            "none" => FailureModel::None,
            "periodic" => FailureModel::Periodic { interval: num(arg)? },
            "mcu_partial" => FailureModel::McuPartial { fraction: num(arg)? },
            other => return Err(format!("unknown failure model {other:?}")),
        };
        m.validate().map_err(|e| e.to_string())?;
        Ok(m)
    }
}

/// Everything one trial needs.
#[derive(Clone, Debug)]
pub struct TrialConfig<'g> {
    pub graph: &'g ContactGraph,
    pub strategy: StrategyKind,
    pub seeding: SeedingScheme,
    pub failure: FailureModel,
    pub seed: u64,
    pub max_sim_time: f64,
    pub k: usize,
    pub packet_size: usize,
    /// LT parameters; defaults to `delta = 0.5` with mid-band `c`.
    pub lt: Option<SolitonParams>,
    /// Documentation only.
    pub time_unit: String,
}

impl<'g> TrialConfig<'g> {
    pub fn new(graph: &'g ContactGraph, strategy: StrategyKind, seeding: SeedingScheme, k: usize) -> Self {
        Self {
            graph,
            strategy,
            seeding,
            failure: FailureModel::None,
            seed: 0,
            max_sim_time: 1e7,
            k,
            packet_size: 16,
            lt: None,
            time_unit: "unit".into(),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.max_sim_time > 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "max_sim_time must be positive, got {}",
                self.max_sim_time
            )));
        }
        if self.k == 0 {
            return Err(EngineError::InvalidConfig("k must be at least 1".into()));
        }
        if self.graph.n() == 0 {
            return Err(EngineError::InvalidConfig("graph has no nodes".into()));
        }
        self.failure.validate()?;
        if matches!(self.failure, FailureModel::McuPartial { .. }) && self.seeding != SeedingScheme::S2Mcu {
            return Err(EngineError::InvalidConfig(
                "mcu_partial failure needs most-central-user seeding".into(),
            ));
        }
        Ok(())
    }

    pub fn soliton(&self) -> Result<SolitonParams, EngineError> {
        match self.lt {
            Some(p) => Ok(p),
            None => Ok(SolitonParams::midband(self.k, 0.5)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_models_parse() {
        assert_eq!("none".parse::<FailureModel>().unwrap(), FailureModel::None);
        assert_eq!(
            "periodic:2.5".parse::<FailureModel>().unwrap(),
            FailureModel::Periodic { interval: 2.5 }
        );
        assert_eq!(
            "mcu_partial:0.25".parse::<FailureModel>().unwrap(),
            FailureModel::McuPartial { fraction: 0.25 }
        );
        assert!("periodic:0".parse::<FailureModel>().is_err());
        assert!("mcu_partial:1".parse::<FailureModel>().is_err());
        assert!("periodic".parse::<FailureModel>().is_err());
    }
}

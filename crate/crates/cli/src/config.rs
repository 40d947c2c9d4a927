//! Experiment configuration: line-oriented `key = value` text with
//! `[graph]` and `[experiment]` sections. `#` starts a comment.
//!
//! ```text
//! [graph]
//! n = 50
//! communities = 5
//!
//! [experiment]
//! strategies = nc, ep_lr, ep_r, er, fd
//! seedings = 80%, 100%, random
//! k = 16
//! trials = 20
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use oppnet::engine::{FailureModel, Horizon};
use oppnet::graph::GraphParams;
use oppnet::seeding::SeedingScheme;
use oppnet::strategies::StrategyKind;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Generate(GraphParams),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGrid {
    /// 200 steps from 0 to the latest finish seen in any cell.
    Auto,
    Range { start: f64, end: f64, step: f64 },
}

impl TimeGrid {
    pub fn points(&self, auto_end: f64) -> Vec<f64> {
        match *self {
            TimeGrid::Auto => oppnet::metrics::uniform_grid(auto_end, 200),
            TimeGrid::Range { start, end, step } => {
                let n = ((end - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + step * i as f64).collect()
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    #[serde(serialize_with = "display_list")]
    pub strategies: Vec<StrategyKind>,
    #[serde(serialize_with = "display_list")]
    pub seedings: Vec<SeedingScheme>,
    #[serde(serialize_with = "display")]
    pub failure: FailureModel,
    pub k: usize,
    pub packet_size: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub out: PathBuf,
    pub time_grid: TimeGrid,
    pub max_sim_time: Horizon,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_list<T: std::fmt::Display, S: serde::Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

type Section = BTreeMap<String, (usize, String)>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, CliError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_owned();
            if name != "graph" && name != "experiment" {
                return Err(config_err(format!("line {line_no}: unknown section [{name}]")));
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(format!("line {line_no}: expected `key = value`, got {line:?}")));
        };
        let Some(section) = &current else {
            return Err(config_err(format!("line {line_no}: `{}` appears before any section", key.trim())));
        };
        let key = key.trim().to_owned();
        let entry = sections.get_mut(section).unwrap();
        if entry.contains_key(&key) {
            return Err(config_err(format!("line {line_no}: duplicate key `{key}` in [{section}]")));
        }
        entry.insert(key, (line_no, value.trim().to_owned()));
    }
    Ok(sections)
}

struct Reader {
    section: &'static str,
    entries: Section,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| config_err(format!("line {line}: invalid `{key}` value {v:?}: {e}"))),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(key)?
            .ok_or_else(|| config_err(format!("missing required key `{key}` in [{}]", self.section)))
    }

    fn list<T: std::str::FromStr<Err = String>>(&mut self, key: &str) -> Result<Vec<T>, CliError> {
        let (line, v) = self
            .take(key)
            .ok_or_else(|| config_err(format!("missing required key `{key}` in [{}]", self.section)))?;
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| config_err(format!("line {line}: `{key}`: {e}"))))
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(config_err(format!("line {line}: `{key}` is empty")));
        }
        Ok(items)
    }

    fn finish(self) -> Result<(), CliError> {
        match self.entries.into_iter().next() {
            Some((key, (line, _))) => Err(config_err(format!("line {line}: unknown key `{key}` in [{}]", self.section))),
            None => Ok(()),
        }
    }
}

fn parse_time_grid(line: usize, v: &str) -> Result<TimeGrid, CliError> {
    if v == "auto" {
        return Ok(TimeGrid::Auto);
    }
    let bad = || config_err(format!("line {line}: `time_grid` must be `auto` or `start:end:step`, got {v:?}"));
    let parts: Vec<f64> = v.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && end.is_finite() && step > 0.0 && end >= start) {
        return Err(bad());
    }
    Ok(TimeGrid::Range { start, end, step })
}

fn graph_source(mut r: Reader, base: &Path) -> Result<GraphSource, CliError> {
    if let Some((_, path)) = r.take("path") {
        r.finish()?;
        return Ok(GraphSource::File(base.join(path)));
    }
    let mut p = GraphParams::default();
    macro_rules! field {
        ($($name:ident),*) => {
            $(if let Some(v) = r.parse(stringify!($name))? {
                p.$name = v;
            })*
        };
    }
    field!(n, avg_degree, max_degree, gamma, community_exponent, min_community, max_community, mu_t, mu_w, beta, seed);
    if let Some((line, v)) = r.take("communities") {
        p.communities = match v.as_str() {
            "auto" => None,
            _ => Some(v.parse().map_err(|_| config_err(format!("line {line}: invalid `communities` value {v:?}")))?),
        };
    }
    r.finish()?;
    p.validate().map_err(|e| config_err(format!("[graph]: {e}")))?;
    Ok(GraphSource::Generate(p))
}

impl ExperimentConfig {
    /// Parses config text. Relative graph paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut sections = parse_sections(text)?;
        let graph = Reader {
            section: "graph",
            entries: sections.remove("graph").unwrap_or_default(),
        };
        let mut r = Reader {
            section: "experiment",
            entries: sections
                .remove("experiment")
                .ok_or_else(|| config_err("missing section [experiment]"))?,
        };
        let graph = graph_source(graph, base)?;
        let strategies = r.list("strategies")?;
        let seedings = r.list("seedings")?;
        let failure = r.parse("failure")?.unwrap_or(FailureModel::None);
        let k: usize = r.required("k")?;
        let packet_size = r.parse("packet_size")?.unwrap_or(16);
        let n_trials: usize = r.required("trials")?;
        let base_seed = r.parse("seed")?.unwrap_or(0);
        let out = r.parse::<PathBuf>("out")?.unwrap_or_else(|| PathBuf::from("out"));
        let time_grid = match r.take("time_grid") {
            Some((line, v)) => parse_time_grid(line, &v)?,
            None => TimeGrid::Auto,
        };
        let max_sim_time = match r.take("max_sim_time") {
            None => Horizon::Auto,
            Some((_, v)) if v == "auto" => Horizon::Auto,
            Some((line, v)) => match v.parse::<f64>() {
                Ok(t) if t > 0.0 && t.is_finite() => Horizon::Fixed(t),
                _ => return Err(config_err(format!("line {line}: `max_sim_time` must be `auto` or a positive number"))),
            },
        };
        r.finish()?;
        if k == 0 {
            return Err(config_err("`k` must be positive"));
        }
        if n_trials == 0 {
            return Err(config_err("`trials` must be positive"));
        }
        if packet_size == 0 {
            return Err(config_err("`packet_size` must be positive"));
        }
        Ok(Self {
            graph,
            strategies,
            seedings,
            failure,
            k,
            packet_size,
            n_trials,
            base_seed,
            out,
            time_grid,
            max_sim_time,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[graph]\nn = 50\ncommunities = 5\nmax_community = 20\n\n[experiment]\nstrategies = nc, ep_lr\nseedings = 80%, random\nk = 16\ntrials = 3\n";

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(text, Path::new("/cfg"))
    }

    #[test]
    fn parses_a_minimal_config() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.strategies, vec![StrategyKind::NetworkCoding, StrategyKind::EpidemicLocalRarest]);
        assert_eq!(c.seedings, vec![SeedingScheme::CommunityPct(0.8), SeedingScheme::RandomNetwork]);
        assert_eq!((c.k, c.n_trials, c.packet_size), (16, 3, 16));
        assert_eq!(c.time_grid, TimeGrid::Auto);
        assert_eq!(c.max_sim_time, Horizon::Auto);
        let GraphSource::Generate(p) = &c.graph else { panic!() };
        assert_eq!((p.n, p.communities, p.max_community), (50, Some(5), 20));
    }

    #[test]
    fn missing_k_names_the_field() {
        let err = parse(&BASE.replace("k = 16\n", "")).unwrap_err();
        assert_eq!(err.kind(), "config");
        assert!(err.to_string().contains("`k`"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(parse(&format!("{BASE}colour = red\n")).unwrap_err().to_string().contains("colour"));
        assert!(parse(&BASE.replace("k = 16", "k = many")).is_err());
        assert!(parse(&BASE.replace("nc, ep_lr", "nc, smoke")).is_err());
        assert!(parse(&format!("{BASE}time_grid = 0:10\n")).is_err());
        assert!(parse("k = 3\n").is_err());
    }

    #[test]
    fn grid_and_horizon_forms() {
        let c = parse(&format!("{BASE}time_grid = 0:10:2.5\nmax_sim_time = 500\n")).unwrap();
        assert_eq!(c.time_grid.points(0.0), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(c.max_sim_time, Horizon::Fixed(500.0));
        let c = parse(&BASE.replace("[graph]\n", "[graph]\npath = g.txt\n").replace("n = 50\ncommunities = 5\nmax_community = 20\n", "")).unwrap();
        assert_eq!(c.graph, GraphSource::File(PathBuf::from("/cfg/g.txt")));
    }
}

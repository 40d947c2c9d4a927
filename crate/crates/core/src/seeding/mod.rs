//! Initial packet placement by the base station at `t = 0`.
//!
//! A plan is a list of placements `(node, packet, copy)`. Packet indices name
//! original packets; `copy > 0` marks an extra copy of the same index when
//! more than `k` packets go to one community. Turning placements into real
//! packets is strategy specific and happens in the engine.

mod centrality;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use centrality::{compute_centralities, s1_allocate, select_mcu, CentralityKind, CentralityScores};

use crate::graph::{CommunityId, ContactGraph, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeedingError {
    #[error("invalid seeding parameters: {0}")]
    InvalidParams(String),
    #[error("community {0} is disconnected")]
    Disconnected(CommunityId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme", content = "arg")]
pub enum SeedingScheme {
    /// `round(p * k)` packets per community on uniform member draws.
    CommunityPct(f64),
    /// `communities * k` packets on uniform draws over all nodes.
    RandomNetwork,
    /// `k` packets per community split in proportion to a centrality.
    S1(CentralityKind),
    /// All `k` packets to each community's most central user.
    S2Mcu,
}

impl fmt::Display for SeedingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedingScheme::CommunityPct(p) => write!(f, "{}pct", (p * 100.0).round()),
            SeedingScheme::RandomNetwork => f.write_str("random"),
            SeedingScheme::S1(kind) => write!(f, "s1_{kind}"),
            SeedingScheme::S2Mcu => f.write_str("mcu"),
        }
    }
}

impl FromStr for SeedingScheme {
    type Err = String;

    /// Accepts `80%`, `80pct`, `random`, `s1_degree`, `mcu`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(num) = s.strip_suffix('%').or_else(|| s.strip_suffix("pct")) {
            let pct: f64 = num.parse().map_err(|_| format!("invalid seeding percentage {s:?}"))?;
            if !(pct > 0.0 && pct.is_finite()) {
                return Err(format!("seeding percentage must be positive, got {s:?}"));
            }
            return Ok(SeedingScheme::CommunityPct(pct / 100.0));
        }
        match s {
            "random" => Ok(SeedingScheme::RandomNetwork),
            "mcu" | "s2" => Ok(SeedingScheme::S2Mcu),
            _ => match s.strip_prefix("s1_") {
                Some(kind) => Ok(SeedingScheme::S1(kind.parse()?)),
                None => Err(format!("unknown seeding scheme {s:?}")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub node: NodeId,
    pub packet: usize,
    pub copy: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedingPlan {
    pub scheme: SeedingScheme,
    pub k: usize,
    pub placements: Vec<Placement>,
    /// Most central user per community (S2 only).
    pub mcu: Vec<NodeId>,
}

impl SeedingPlan {
    /// Seeded packet count per node.
    pub fn allocations(&self, n: usize) -> Vec<usize> {
        let mut counts = vec![0; n];
        for p in &self.placements {
            counts[p.node] += 1;
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.placements.len()
    }
}

/// Places `slots` packets over `pool`: slot `j` carries packet `perm[j mod k]`
/// (copy `j div k`) and goes to a uniform member that does not yet hold that
/// packet index, falling back to any member when all of them do.
fn place_slots<R: Rng + ?Sized>(pool: &[NodeId], k: usize, slots: usize, rng: &mut R, out: &mut Vec<Placement>) {
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let mut holders: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    for j in 0..slots {
        let packet = perm[j % k];
        let free: Vec<NodeId> = pool.iter().copied().filter(|v| !holders[packet].contains(v)).collect();
        let node = if free.is_empty() {
            pool[rng.random_range(0..pool.len())]
        } else {
            free[rng.random_range(0..free.len())]
        };
        holders[packet].push(node);
        out.push(Placement {
            node,
            packet,
            copy: j / k,
        });
    }
}

pub fn seed_community_pct<R: Rng + ?Sized>(
    g: &ContactGraph,
    k: usize,
    p: f64,
    rng: &mut R,
) -> Result<SeedingPlan, SeedingError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(SeedingError::InvalidParams(format!("seeding fraction must be positive, got {p}")));
    }
    check_k(k)?;
    let per = (p * k as f64).round() as usize;
    let mut placements = Vec::with_capacity(per * g.n_communities());
    for c in 0..g.n_communities() {
        place_slots(g.members(c), k, per, rng, &mut placements);
    }
    Ok(SeedingPlan {
        scheme: SeedingScheme::CommunityPct(p),
        k,
        placements,
        mcu: Vec::new(),
    })
}

pub fn seed_random_network<R: Rng + ?Sized>(
    g: &ContactGraph,
    k: usize,
    n_communities: usize,
    rng: &mut R,
) -> Result<SeedingPlan, SeedingError> {
    check_k(k)?;
    let all: Vec<NodeId> = (0..g.n()).collect();
    let mut placements = Vec::with_capacity(n_communities * k);
    place_slots(&all, k, n_communities * k, rng, &mut placements);
    Ok(SeedingPlan {
        scheme: SeedingScheme::RandomNetwork,
        k,
        placements,
        mcu: Vec::new(),
    })
}

pub fn seed_s1<R: Rng + ?Sized>(
    g: &ContactGraph,
    k: usize,
    kind: CentralityKind,
    rng: &mut R,
) -> Result<SeedingPlan, SeedingError> {
    check_k(k)?;
    let mut placements = Vec::with_capacity(k * g.n_communities());
    for c in 0..g.n_communities() {
        let scores = compute_centralities(g, c)?;
        let counts = if scores.of(kind).iter().sum::<f64>() > 0.0 {
            s1_allocate(scores.of(kind), k)?
        } else {
            // single-node communities have all-zero normalized scores
            s1_allocate(&vec![1.0; scores.nodes.len()], k)?
        };
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(rng);
        let mut next = 0;
        for (i, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                placements.push(Placement {
                    node: scores.nodes[i],
                    packet: perm[next],
                    copy: 0,
                });
                next += 1;
            }
        }
    }
    Ok(SeedingPlan {
        scheme: SeedingScheme::S1(kind),
        k,
        placements,
        mcu: Vec::new(),
    })
}

pub fn seed_s2(g: &ContactGraph, k: usize) -> Result<SeedingPlan, SeedingError> {
    check_k(k)?;
    let mcu = mcus(g)?;
    let placements = mcu
        .iter()
        .flat_map(|&node| (0..k).map(move |packet| Placement { node, packet, copy: 0 }))
        .collect();
    Ok(SeedingPlan {
        scheme: SeedingScheme::S2Mcu,
        k,
        placements,
        mcu,
    })
}

/// Most central user of every community.
pub fn mcus(g: &ContactGraph) -> Result<Vec<NodeId>, SeedingError> {
    (0..g.n_communities())
        .map(|c| compute_centralities(g, c).map(|s| select_mcu(&s)))
        .collect()
}

pub fn build_plan<R: Rng + ?Sized>(
    g: &ContactGraph,
    k: usize,
    scheme: SeedingScheme,
    rng: &mut R,
) -> Result<SeedingPlan, SeedingError> {
    match scheme {
        SeedingScheme::CommunityPct(p) => seed_community_pct(g, k, p, rng),
        SeedingScheme::RandomNetwork => seed_random_network(g, k, g.n_communities(), rng),
        SeedingScheme::S1(kind) => seed_s1(g, k, kind, rng),
        SeedingScheme::S2Mcu => seed_s2(g, k),
    }
}

fn check_k(k: usize) -> Result<(), SeedingError> {
    if k == 0 {
        return Err(SeedingError::InvalidParams("k must be at least 1".into()));
    }
    Ok(())
}

//! Weighted contact graphs with hard community membership.
//!
//! Edge weights are meeting rates (meetings per unit time); the mean
//! inter-contact time of an edge is the reciprocal of its weight.

mod generate;
mod io;
mod weights;

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{build_topology, generate, sample_community_sizes, sample_degree_sequence, GenerationReport};
pub use io::{load_graph, parse_graph, render_graph, save_graph};
pub use weights::{assign_weights, StrengthSplit, WeightReport, WEIGHT_FLOOR};

pub type NodeId = usize;
pub type CommunityId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Generator parameters. Defaults follow the 200-node/14-community setting
/// with `mu_w = 0.001`, `mu_t = 0.1`, `gamma = 2`, `beta = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub n: usize,
    pub avg_degree: f64,
    pub max_degree: usize,
    pub gamma: f64,
    pub community_exponent: f64,
    pub min_community: usize,
    pub max_community: usize,
    /// Force an exact community count; sizes still follow the power law
    /// within `[min_community, max_community]`.
    pub communities: Option<usize>,
    pub mu_t: f64,
    pub mu_w: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            n: 200,
            avg_degree: 10.0,
            max_degree: 30,
            gamma: 2.0,
            community_exponent: 1.5,
            min_community: 6,
            max_community: 40,
            communities: Some(14),
            mu_t: 0.1,
            mu_w: 0.001,
            beta: 1.0,
            seed: 1,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InvalidParams(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(0.0..1.0).contains(&self.mu_t) {
            return bad(format!("mu_t must lie in [0,1), got {}", self.mu_t));
        }
        if !(0.0..1.0).contains(&self.mu_w) {
            return bad(format!("mu_w must lie in [0,1), got {}", self.mu_w));
        }
        if !(self.gamma > 1.0) {
            return bad(format!("gamma must exceed 1, got {}", self.gamma));
        }
        if self.max_degree < 2 {
            return bad(format!("max_degree must be at least 2, got {}", self.max_degree));
        }
        if !(self.avg_degree > 0.0) {
            return bad(format!("avg_degree must be positive, got {}", self.avg_degree));
        }
        if self.min_community == 0 || self.min_community > self.max_community {
            return bad(format!(
                "community bounds must satisfy 1 <= minc <= maxc, got [{}, {}]",
                self.min_community, self.max_community
            ));
        }
        if self.min_community > self.n {
            return bad(format!("min_community {} exceeds n {}", self.min_community, self.n));
        }
        if !self.beta.is_finite() {
            return bad("beta must be finite".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactGraph {
    membership: Vec<CommunityId>,
    n_communities: usize,
    /// Sorted by `(u, v)` with `u < v`.
    edges: Vec<Edge>,
    #[serde(skip)]
    adj: Vec<Vec<(NodeId, usize)>>,
    #[serde(skip)]
    members: Vec<Vec<NodeId>>,
}

impl ContactGraph {
    /// Builds and validates a graph. Community ids must be `0..n_communities`
    /// and every community must be nonempty with a connected induced subgraph.
    pub fn new(membership: Vec<CommunityId>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let g = Self::new_unchecked(membership, edges)?;
        g.validate()?;
        Ok(g)
    }

    /// Structural checks only (no community connectivity).
    pub(crate) fn new_unchecked(membership: Vec<CommunityId>, mut edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = membership.len();
        let n_communities = membership.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut members = vec![Vec::new(); n_communities];
        for (v, &c) in membership.iter().enumerate() {
            members[c].push(v);
        }
        if let Some(c) = members.iter().position(|m| m.is_empty()) {
            return Err(GraphError::Validation(format!("community {c} has no members")));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in edges.iter_mut() {
            if e.u == e.v {
                return Err(GraphError::Validation(format!("self-loop on node {}", e.u)));
            }
            if e.u >= n || e.v >= n {
                return Err(GraphError::Validation(format!("edge ({}, {}) references unknown node", e.u, e.v)));
            }
            if !(e.w > 0.0 && e.w.is_finite()) {
                return Err(GraphError::Validation(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.u, e.v, e.w
                )));
            }
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
            if !seen.insert((e.u, e.v)) {
                return Err(GraphError::Validation(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        Ok(Self {
            membership,
            n_communities,
            edges,
            adj,
            members,
        })
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        for c in 0..self.n_communities {
            if !self.community_connected(c) {
                return Err(GraphError::Validation(format!(
                    "community {c} induced subgraph is disconnected"
                )));
            }
        }
        Ok(())
    }

    fn community_connected(&self, c: CommunityId) -> bool {
        let members = &self.members[c];
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([members[0]]);
        seen.insert(members[0]);
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.adj[v] {
                if self.membership[u] == c && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        seen.len() == members.len()
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    pub fn community_of(&self, v: NodeId) -> CommunityId {
        self.membership[v]
    }

    pub fn membership(&self) -> &[CommunityId] {
        &self.membership
    }

    pub fn members(&self, c: CommunityId) -> &[NodeId] {
        &self.members[c]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn strength(&self, v: NodeId) -> f64 {
        self.adj[v].iter().map(|&(_, e)| self.edges[e].w).sum()
    }

    pub fn is_intra(&self, e: &Edge) -> bool {
        self.membership[e.u] == self.membership[e.v]
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.adj[u].iter().find(|&&(x, _)| x == v).map(|&(_, e)| self.edges[e].w)
    }

    /// Copy with new weights, one per edge in `edges()` order.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, GraphError> {
        assert_eq!(weights.len(), self.edges.len());
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, &w)| Edge { u: e.u, v: e.v, w })
            .collect();
        Self::new(self.membership.clone(), edges)
    }

    /// Rebuild adjacency after deserialization.
    pub fn reindexed(self) -> Result<Self, GraphError> {
        Self::new(self.membership, self.edges)
    }

    pub fn stats(&self) -> GraphStats {
        let inter = self.edges.iter().filter(|e| !self.is_intra(e)).count();
        let (mut w_in, mut w_out, mut n_in) = (0.0, 0.0, 0usize);
        for e in &self.edges {
            if self.is_intra(e) {
                w_in += e.w;
                n_in += 1;
            } else {
                w_out += e.w;
            }
        }
        let m = self.edges.len();
        GraphStats {
            nodes: self.n(),
            edges: m,
            communities: self.n_communities,
            inter_edge_fraction: if m == 0 { 0.0 } else { inter as f64 / m as f64 },
            inter_weight_fraction: if w_in + w_out == 0.0 { 0.0 } else { w_out / (w_in + w_out) },
            mean_intra_weight: if n_in == 0 { 0.0 } else { w_in / n_in as f64 },
            mean_inter_weight: if inter == 0 { 0.0 } else { w_out / inter as f64 },
            mean_degree: if self.n() == 0 { 0.0 } else { 2.0 * m as f64 / self.n() as f64 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub communities: usize,
    /// Realized topological mixing: inter-community share of edges.
    pub inter_edge_fraction: f64,
    /// Realized weight mixing: inter-community share of total weight.
    pub inter_weight_fraction: f64,
    pub mean_intra_weight: f64,
    pub mean_inter_weight: f64,
    pub mean_degree: f64,
}

/// Mean inter-contact interval `1/w` of an edge with meeting rate `w`.
pub fn mean_intercontact(w: f64) -> Result<f64, GraphError> {
    if !(w > 0.0) {
        return Err(GraphError::Domain(format!("meeting rate must be positive, got {w}")));
    }
    Ok(1.0 / w)
}

//! Degree, betweenness and closeness centrality on community subgraphs.
//! Path lengths are expected inter-contact times `1/w`; closeness measures
//! them in units of the shortest edge in the community.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SeedingError;
use crate::graph::{CommunityId, ContactGraph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityKind {
    Degree,
    Betweenness,
    Closeness,
}

impl fmt::Display for CentralityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CentralityKind::Degree => "degree",
            CentralityKind::Betweenness => "betweenness",
            CentralityKind::Closeness => "closeness",
        })
    }
}

impl FromStr for CentralityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "degree" => Ok(CentralityKind::Degree),
            "betweenness" => Ok(CentralityKind::Betweenness),
            "closeness" => Ok(CentralityKind::Closeness),
            other => Err(format!("unknown centrality {other:?}")),
        }
    }
}

/// Normalized scores for one community, indexed like `nodes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub community: CommunityId,
    pub nodes: Vec<NodeId>,
    pub degree: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub closeness: Vec<f64>,
}

impl CentralityScores {
    pub fn of(&self, kind: CentralityKind) -> &[f64] {
        match kind {
            CentralityKind::Degree => &self.degree,
            CentralityKind::Betweenness => &self.betweenness,
            CentralityKind::Closeness => &self.closeness,
        }
    }

    pub fn aggregate(&self) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|i| self.degree[i] + self.betweenness[i] + self.closeness[i])
            .collect()
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

pub fn compute_centralities(g: &ContactGraph, community: CommunityId) -> Result<CentralityScores, SeedingError> {
    let nodes = g.members(community).to_vec();
    let nc = nodes.len();
    let mut local = vec![usize::MAX; g.n()];
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    // local adjacency with lengths
    let adj: Vec<Vec<(usize, f64)>> = nodes
        .iter()
        .map(|&v| {
            g.neighbors(v)
                .iter()
                .filter(|&&(u, _)| g.community_of(u) == community)
                .map(|&(u, e)| (local[u], 1.0 / g.edges()[e].w))
                .collect()
        })
        .collect();

    // distances in units of the shortest community edge keep closeness in
    // [0, 1] and independent of the overall weight scale
    let unit = adj
        .iter()
        .flatten()
        .map(|&(_, len)| len)
        .fold(f64::INFINITY, f64::min);
    let mut betweenness = vec![0.0; nc];
    let mut closeness = vec![0.0; nc];
    for s in 0..nc {
        // Brandes: Dijkstra from s, then dependency accumulation
        let mut dist = vec![f64::INFINITY; nc];
        let mut sigma = vec![0.0f64; nc];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); nc];
        let mut order = Vec::with_capacity(nc);
        let mut done = vec![false; nc];
        dist[s] = 0.0;
        sigma[s] = 1.0;
        let mut heap = BinaryHeap::from([Item(0.0, s)]);
        while let Some(Item(d, v)) = heap.pop() {
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            order.push(v);
            for &(u, len) in &adj[v] {
                let nd = d + len;
                if done[u] {
                    continue;
                }
                if dist[u].is_infinite() || (nd < dist[u] && !same_length(nd, dist[u])) {
                    dist[u] = nd;
                    sigma[u] = sigma[v];
                    preds[u] = vec![v];
                    heap.push(Item(nd, u));
                } else if same_length(nd, dist[u]) {
                    sigma[u] += sigma[v];
                    preds[u].push(v);
                }
            }
        }
        if order.len() != nc {
            return Err(SeedingError::Disconnected(community));
        }
        let total: f64 = dist.iter().sum();
        closeness[s] = if total > 0.0 { (nc - 1) as f64 * unit / total } else { 0.0 };
        let mut delta = vec![0.0; nc];
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                betweenness[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both ends
    let pairs = (nc.saturating_sub(1) * nc.saturating_sub(2)) as f64 / 2.0;
    for b in &mut betweenness {
        *b = if pairs > 0.0 { *b / 2.0 / pairs } else { 0.0 };
    }
    let degree = adj
        .iter()
        .map(|a| if nc > 1 { a.len() as f64 / (nc - 1) as f64 } else { 0.0 })
        .collect();
    Ok(CentralityScores {
        community,
        nodes,
        degree,
        betweenness,
        closeness,
    })
}

/// Node with the largest degree + betweenness + closeness; ties go to the
/// lowest node id.
pub fn select_mcu(scores: &CentralityScores) -> NodeId {
    let agg = scores.aggregate();
    let mut best = 0;
    for i in 1..agg.len() {
        let better = agg[i] > agg[best] || (agg[i] == agg[best] && scores.nodes[i] < scores.nodes[best]);
        if better {
            best = i;
        }
    }
    scores.nodes[best]
}

/// Proportional allocation `C(i) / sum C * k`, rounded by largest remainder so
/// the counts sum to `k` exactly. Remainder ties go to the earlier entry.
pub fn s1_allocate(scores: &[f64], k: usize) -> Result<Vec<usize>, SeedingError> {
    let total: f64 = scores.iter().sum();
    if scores.is_empty() || !(total > 0.0) || scores.iter().any(|&s| s < 0.0) {
        return Err(SeedingError::InvalidParams(
            "centrality scores must be nonnegative with a positive sum".into(),
        ));
    }
    let exact: Vec<f64> = scores.iter().map(|&s| s / total * k as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(k.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn graph(n: usize, pairs: &[(usize, usize, f64)]) -> ContactGraph {
        let edges = pairs.iter().map(|&(u, v, w)| Edge { u, v, w }).collect();
        ContactGraph::new(vec![0; n], edges).unwrap()
    }

    #[test]
    fn star_scores() {
        let g = graph(5, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)]);
        let s = compute_centralities(&g, 0).unwrap();
        assert_eq!(s.degree[0], 1.0);
        assert_eq!(s.degree[1], 0.25);
        assert!((s.betweenness[0] - 1.0).abs() < 1e-12);
        assert!(s.betweenness[1..].iter().all(|&b| b == 0.0));
        assert_eq!(select_mcu(&s), 0);
    }

    #[test]
    fn path_closeness() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let s = compute_centralities(&g, 0).unwrap();
        assert!((s.closeness[1] - 1.0).abs() < 1e-12);
        assert!((s.closeness[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_tie_goes_to_lower_id() {
        let g = graph(2, &[(0, 1, 1.0)]);
        assert_eq!(select_mcu(&compute_centralities(&g, 0).unwrap()), 0);
    }

    #[test]
    fn s1_examples() {
        assert_eq!(s1_allocate(&[1.0; 4], 80).unwrap(), vec![20; 4]);
        assert_eq!(s1_allocate(&[0.7], 80).unwrap(), vec![80]);
        assert_eq!(s1_allocate(&[0.5, 0.3, 0.2], 10).unwrap(), vec![5, 3, 2]);
        assert_eq!(s1_allocate(&[1.0; 3], 10).unwrap().iter().sum::<usize>(), 10);
        assert!(s1_allocate(&[0.0, 0.0], 10).is_err());
    }
}

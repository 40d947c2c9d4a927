//! LFR-style benchmark generator: power-law degrees and community sizes,
//! configuration-model stub matching with rewiring, then strength-based
//! weights.

use std::collections::{HashSet, VecDeque};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{assign_weights, CommunityId, ContactGraph, Edge, GraphError, GraphParams, NodeId};

const DEGREE_RETRIES: usize = 5000;
const TOPOLOGY_ATTEMPTS: usize = 25;
const REWIRE_PASSES: usize = 50;
const MIN_DEGREE: usize = 2;
const MAX_DROPPED_SHARE: f64 = 0.02;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub topology_attempts: usize,
    /// Nodes whose internal degree was capped at their community size - 1.
    pub clipped_nodes: usize,
    /// Edges added to join disconnected pieces (community or global).
    pub bridging_edges: usize,
    /// Stubs discarded because no simple-graph placement was found.
    pub dropped_stubs: usize,
    pub weight_sweeps: usize,
    pub weight_warnings: Vec<String>,
}

/// Discrete power-law weights `d^-exp` on `[lo_int, hi]`, where the lowest
/// support point is down-weighted by the fractional part of the real cutoff.
fn power_law_weights(cutoff: f64, hi: usize, exponent: f64) -> Vec<(usize, f64)> {
    let lo = cutoff.floor() as usize;
    (lo..=hi)
        .map(|d| {
            let frac = (d as f64 + 1.0 - cutoff).clamp(0.0, 1.0);
            (d, (d as f64).powf(-exponent) * frac)
        })
        .filter(|&(_, w)| w > 0.0)
        .collect()
}

fn mean_of(weights: &[(usize, f64)]) -> f64 {
    let z: f64 = weights.iter().map(|w| w.1).sum();
    weights.iter().map(|&(d, w)| d as f64 * w).sum::<f64>() / z
}

struct InverseCdf {
    values: Vec<usize>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new(weights: &[(usize, f64)]) -> Self {
        let z: f64 = weights.iter().map(|w| w.1).sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w.1 / z;
                acc
            })
            .collect();
        if let Some(l) = cdf.last_mut() {
            *l = 1.0;
        }
        Self {
            values: weights.iter().map(|w| w.0).collect(),
            cdf,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[i]
    }
}

/// Power-law degree sequence on `[2, max_degree]` whose lower cutoff is tuned
/// so the expected mean equals `avg_degree` (clamped into the support).
pub fn sample_degree_sequence<R: Rng + ?Sized>(params: &GraphParams, rng: &mut R) -> Result<Vec<usize>, GraphError> {
    params.validate()?;
    let hi = params.max_degree;
    let target = params.avg_degree.clamp(MIN_DEGREE as f64, hi as f64);
    let (mut lo_cut, mut hi_cut) = (MIN_DEGREE as f64, hi as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo_cut + hi_cut);
        if mean_of(&power_law_weights(mid, hi, params.gamma)) < target {
            lo_cut = mid;
        } else {
            hi_cut = mid;
        }
    }
    let dist = InverseCdf::new(&power_law_weights(0.5 * (lo_cut + hi_cut), hi, params.gamma));
    for _ in 0..DEGREE_RETRIES {
        let mut degrees: Vec<usize> = (0..params.n).map(|_| dist.sample(rng)).collect();
        let mean = degrees.iter().sum::<usize>() as f64 / params.n as f64;
        if (mean - target).abs() > 0.1 * target {
            continue;
        }
        if degrees.iter().sum::<usize>() % 2 == 1 {
            let i = rng.random_range(0..params.n);
            if degrees[i] < hi {
                degrees[i] += 1;
            } else {
                degrees[i] -= 1;
            }
        }
        return Ok(degrees);
    }
    Err(GraphError::Generation(format!(
        "could not draw {} degrees with mean within 10% of {target} after {DEGREE_RETRIES} attempts",
        params.n
    )))
}

/// Power-law community sizes in `[min_community, max_community]` summing to `n`.
pub fn sample_community_sizes<R: Rng + ?Sized>(params: &GraphParams, rng: &mut R) -> Result<Vec<usize>, GraphError> {
    let (n, minc) = (params.n, params.min_community);
    if minc == 0 || minc > params.max_community {
        return Err(GraphError::Generation(format!(
            "community bounds [{minc}, {}] are empty",
            params.max_community
        )));
    }
    if n < minc {
        return Err(GraphError::Generation(format!("n = {n} is smaller than min_community = {minc}")));
    }
    let maxc = params.max_community.min(n);
    let dist = InverseCdf::new(&power_law_weights(minc as f64, maxc, params.community_exponent));

    if let Some(c) = params.communities {
        if c == 0 || c * minc > n || c * maxc < n {
            return Err(GraphError::Generation(format!(
                "{c} communities with sizes in [{minc}, {maxc}] cannot sum to {n}"
            )));
        }
        let mut sizes: Vec<usize> = (0..c).map(|_| dist.sample(rng)).collect();
        let mut total: usize = sizes.iter().sum();
        while total != n {
            let i = rng.random_range(0..c);
            if total < n && sizes[i] < maxc {
                sizes[i] += 1;
                total += 1;
            } else if total > n && sizes[i] > minc {
                sizes[i] -= 1;
                total -= 1;
            }
        }
        return Ok(sizes);
    }

    let mut sizes = Vec::new();
    let mut total = 0;
    while total < n {
        let s = dist.sample(rng);
        sizes.push(s);
        total += s;
    }
    let last = sizes.pop().expect("at least one draw");
    let rem = n - (total - last);
    if rem >= minc {
        sizes.push(rem);
    } else {
        // merge the short remainder into communities with spare capacity
        for _ in 0..rem {
            let open: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] < maxc).collect();
            let Some(&i) = open.choose(rng) else {
                return Err(GraphError::Generation(format!(
                    "cannot place {rem} leftover nodes without exceeding max_community {maxc}"
                )));
            };
            sizes[i] += 1;
        }
    }
    Ok(sizes)
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

/// Configuration-model matching of `stubs` followed by double-edge rewiring of
/// bad pairs. `allowed(a, b)` decides whether an edge may exist at all.
/// Returns the matched edges and the number of pairs that could not be placed.
fn match_stubs<R: Rng + ?Sized>(
    mut stubs: Vec<NodeId>,
    existing: &mut HashSet<(NodeId, NodeId)>,
    allowed: impl Fn(NodeId, NodeId) -> bool,
    rng: &mut R,
) -> (Vec<(NodeId, NodeId)>, usize) {
    stubs.shuffle(rng);
    let mut good: Vec<(NodeId, NodeId)> = Vec::with_capacity(stubs.len() / 2);
    let mut bad: Vec<(NodeId, NodeId)> = Vec::new();
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a != b && allowed(a, b) && !existing.contains(&key(a, b)) {
            existing.insert(key(a, b));
            good.push((a, b));
        } else {
            bad.push((a, b));
        }
    }
    let valid = |x: NodeId, y: NodeId, existing: &HashSet<(NodeId, NodeId)>| {
        x != y && allowed(x, y) && !existing.contains(&key(x, y))
    };
    for _ in 0..REWIRE_PASSES {
        if bad.is_empty() || good.is_empty() {
            break;
        }
        let before = bad.len();
        let mut still_bad = Vec::new();
        for (a, b) in bad {
            let mut fixed = false;
            let mut order: Vec<usize> = (0..good.len()).collect();
            order.shuffle(rng);
            for gi in order {
                let (x, y) = good[gi];
                existing.remove(&key(x, y));
                let candidates = [((a, x), (b, y)), ((a, y), (b, x))];
                if let Some(&(e1, e2)) = candidates.iter().find(|&&(e1, e2)| {
                    valid(e1.0, e1.1, existing) && valid(e2.0, e2.1, existing) && key(e1.0, e1.1) != key(e2.0, e2.1)
                }) {
                    existing.insert(key(e1.0, e1.1));
                    existing.insert(key(e2.0, e2.1));
                    good[gi] = e1;
                    good.push(e2);
                    fixed = true;
                    break;
                }
                existing.insert(key(x, y));
            }
            if !fixed {
                still_bad.push((a, b));
            }
        }
        bad = still_bad;
        if bad.len() == before {
            break;
        }
    }
    (good, bad.len())
}

fn components(nodes: &[NodeId], adj: &[Vec<NodeId>], inside: impl Fn(NodeId) -> bool) -> Vec<Vec<NodeId>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &s in nodes {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &u in &adj[v] {
                if inside(u) && seen.insert(u) {
                    comp.push(u);
                    q.push_back(u);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Build an unweighted community graph (all weights 1).
///
/// Each node gets `floor(mu_t * d + U)` external stubs (unbiased, within one
/// edge of `round(mu_t * d)`), is placed in a community large enough for its
/// internal degree, and stubs are matched inside then across communities.
pub fn build_topology<R: Rng + ?Sized>(
    degrees: &[usize],
    sizes: &[usize],
    mu_t: f64,
    rng: &mut R,
) -> Result<(ContactGraph, GenerationReport), GraphError> {
    let n = degrees.len();
    if sizes.iter().sum::<usize>() != n {
        return Err(GraphError::InvalidParams(format!(
            "community sizes sum to {}, but there are {n} degrees",
            sizes.iter().sum::<usize>()
        )));
    }
    let mut report = GenerationReport::default();
    let n_comm = sizes.len();
    let single = n_comm == 1;

    let target_ext: Vec<f64> = degrees.iter().map(|&d| mu_t * d as f64).collect();
    let mut ext: Vec<usize> = target_ext
        .iter()
        .map(|&x| if single { 0 } else { (x + rng.random::<f64>()).floor() as usize })
        .collect();
    let mut int: Vec<usize> = degrees.iter().zip(&ext).map(|(&d, &e)| d - e.min(d)).collect();

    // Community assignment, largest internal degree first.
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| int[b].cmp(&int[a]));
    let mut free = sizes.to_vec();
    let mut membership = vec![usize::MAX; n];
    for &v in &order {
        let fits: Vec<CommunityId> = (0..n_comm).filter(|&c| free[c] > 0 && sizes[c] > int[v]).collect();
        let c = match fits.choose(rng) {
            Some(&c) => c,
            None => {
                let c = (0..n_comm)
                    .filter(|&c| free[c] > 0)
                    .max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)))
                    .expect("capacity matches node count");
                int[v] = sizes[c] - 1;
                report.clipped_nodes += 1;
                c
            }
        };
        free[c] -= 1;
        membership[v] = c;
    }
    let mut members = vec![Vec::new(); n_comm];
    for v in 0..n {
        members[membership[v]].push(v);
    }

    // Per-community parity: internal stub counts must be even.
    let within_slack = |v: NodeId, e: usize| (e as f64 - target_ext[v].round()).abs() <= 1.0;
    for c in 0..n_comm {
        let total: usize = members[c].iter().map(|&v| int[v]).sum();
        if total % 2 == 0 {
            continue;
        }
        let size = sizes[c];
        let mut cand: Vec<NodeId> = members[c].clone();
        cand.shuffle(rng);
        // Prefer moving a stub out to the external pool, then pulling one in.
        let pick_out = cand.iter().copied().find(|&v| int[v] > 0 && !single && within_slack(v, ext[v] + 1));
        let pick_in = cand
            .iter()
            .copied()
            .find(|&v| int[v] + 1 < size && ext[v] > 0 && within_slack(v, ext[v] - 1));
        match (pick_out, pick_in) {
            (Some(v), _) => {
                int[v] -= 1;
                ext[v] += 1;
            }
            (None, Some(v)) => {
                int[v] += 1;
                ext[v] -= 1;
            }
            (None, None) => {
                let v = *cand.iter().find(|&&v| int[v] > 0).ok_or_else(|| {
                    GraphError::Generation(format!("community {c} cannot reach even internal degree"))
                })?;
                int[v] -= 1;
                if !single {
                    ext[v] += 1;
                }
            }
        }
    }

    let mut existing: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for c in 0..n_comm {
        let stubs: Vec<NodeId> = members[c].iter().flat_map(|&v| std::iter::repeat_n(v, int[v])).collect();
        let (m, lost) = match_stubs(stubs, &mut existing, |_, _| true, rng);
        report.dropped_stubs += 2 * lost;
        edges.extend(m);
    }

    // Join disconnected pieces inside each community.
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for c in 0..n_comm {
        loop {
            let comps = components(&members[c], &adj, |u| membership[u] == c);
            if comps.len() <= 1 {
                break;
            }
            let largest = comps.iter().enumerate().max_by_key(|(_, comp)| comp.len()).map(|(i, _)| i).unwrap();
            let other = (0..comps.len()).find(|&i| i != largest).unwrap();
            if !splice_components(&comps[largest], &comps[other], &mut edges, &mut existing, &mut adj, &membership, rng)
            {
                let a = *comps[largest].choose(rng).unwrap();
                let b = *comps[other].choose(rng).unwrap();
                existing.insert(key(a, b));
                edges.push((a, b));
                adj[a].push(b);
                adj[b].push(a);
                report.bridging_edges += 1;
            }
        }
    }

    if !single {
        let mut ext_stubs: Vec<NodeId> = (0..n).flat_map(|v| std::iter::repeat_n(v, ext[v])).collect();
        if ext_stubs.len() % 2 == 1 {
            let i = rng.random_range(0..ext_stubs.len());
            ext_stubs.swap_remove(i);
        }
        let (m, lost) = match_stubs(ext_stubs, &mut existing, |a, b| membership[a] != membership[b], rng);
        report.dropped_stubs += 2 * lost;
        for &(a, b) in &m {
            adj[a].push(b);
            adj[b].push(a);
        }
        edges.extend(m);

        // Global connectivity through inter-community bridges.
        let all: Vec<NodeId> = (0..n).collect();
        loop {
            let comps = components(&all, &adj, |_| true);
            if comps.len() <= 1 {
                break;
            }
            let a = *comps[0].choose(rng).unwrap();
            let pool: Vec<NodeId> = comps[1].iter().copied().filter(|&b| membership[b] != membership[a]).collect();
            let b = match pool.choose(rng) {
                Some(&b) => b,
                None => *comps[1].choose(rng).unwrap(),
            };
            existing.insert(key(a, b));
            edges.push((a, b));
            adj[a].push(b);
            adj[b].push(a);
            report.bridging_edges += 1;
        }
    }

    let total_stubs: usize = degrees.iter().sum();
    if report.dropped_stubs as f64 > MAX_DROPPED_SHARE * total_stubs as f64 {
        return Err(GraphError::Generation(format!(
            "rewiring left {} of {total_stubs} stubs unmatched after {REWIRE_PASSES} passes",
            report.dropped_stubs
        )));
    }
    let edges = edges.into_iter().map(|(u, v)| Edge { u, v, w: 1.0 }).collect();
    Ok((ContactGraph::new(membership, edges)?, report))
}

/// Merge two components of one community by a degree-preserving swap
/// `(a,b),(c,d) -> (a,c),(b,d)` where `(a,b)` lies on a cycle of its
/// component. Returns false when neither component has a cycle edge.
fn splice_components<R: Rng + ?Sized>(
    big: &[NodeId],
    small: &[NodeId],
    edges: &mut [(NodeId, NodeId)],
    existing: &mut HashSet<(NodeId, NodeId)>,
    adj: &mut [Vec<NodeId>],
    membership: &[CommunityId],
    rng: &mut R,
) -> bool {
    let in_set = |set: &[NodeId], v: NodeId| set.contains(&v);
    let edge_ids = |set: &[NodeId]| -> Vec<usize> {
        (0..edges.len())
            .filter(|&i| in_set(set, edges[i].0) && in_set(set, edges[i].1))
            .collect()
    };
    let big_edges = edge_ids(big);
    let small_edges = edge_ids(small);
    let is_cycle_edge = |i: usize, set: &[NodeId], adj: &[Vec<NodeId>]| -> bool {
        // (a,b) lies on a cycle iff b is reachable from a without using it
        let (a, b) = edges[i];
        let mut seen = HashSet::from([a]);
        let mut q = VecDeque::from([a]);
        while let Some(v) = q.pop_front() {
            for &u in &adj[v] {
                if (v == a && u == b) || (v == b && u == a) || !in_set(set, u) || membership[u] != membership[a] {
                    continue;
                }
                if u == b {
                    return true;
                }
                if seen.insert(u) {
                    q.push_back(u);
                }
            }
        }
        false
    };
    let mut pick = None;
    let mut shuffled = big_edges.clone();
    shuffled.shuffle(rng);
    if let (Some(&i), Some(&j)) = (
        shuffled.iter().find(|&&i| is_cycle_edge(i, big, adj)),
        small_edges.choose(rng),
    ) {
        pick = Some((i, j));
    } else {
        let mut s2 = small_edges.clone();
        s2.shuffle(rng);
        if let (Some(&j), Some(&i)) = (s2.iter().find(|&&j| is_cycle_edge(j, small, adj)), big_edges.choose(rng)) {
            pick = Some((i, j));
        }
    }
    let Some((i, j)) = pick else { return false };
    let (a, b) = edges[i];
    let (c, d) = edges[j];
    // cross pairs are new because the two components share no edges
    existing.remove(&key(a, b));
    existing.remove(&key(c, d));
    existing.insert(key(a, c));
    existing.insert(key(b, d));
    edges[i] = (a, c);
    edges[j] = (b, d);
    let unlink = |adj: &mut [Vec<NodeId>], x: NodeId, y: NodeId| {
        if let Some(p) = adj[x].iter().position(|&z| z == y) {
            adj[x].swap_remove(p);
        }
        if let Some(p) = adj[y].iter().position(|&z| z == x) {
            adj[y].swap_remove(p);
        }
    };
    unlink(adj, a, b);
    unlink(adj, c, d);
    adj[a].push(c);
    adj[c].push(a);
    adj[b].push(d);
    adj[d].push(b);
    true
}

/// Full pipeline: degrees, sizes, topology (retried), weights. Deterministic
/// in `params.seed`.
pub fn generate(params: &GraphParams) -> Result<(ContactGraph, GenerationReport), GraphError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut last_err = None;
    for attempt in 1..=TOPOLOGY_ATTEMPTS {
        let degrees = sample_degree_sequence(params, &mut rng)?;
        let sizes = sample_community_sizes(params, &mut rng)?;
        match build_topology(&degrees, &sizes, params.mu_t, &mut rng) {
            Ok((topo, mut report)) => {
                report.topology_attempts = attempt;
                let (g, wr) = assign_weights(&topo, params.mu_w, params.beta)?;
                report.weight_sweeps = wr.sweeps;
                report.weight_warnings = wr.warnings;
                return Ok((g, report));
            }
            Err(e @ GraphError::Generation(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| GraphError::Generation("topology generation failed".into())))
}

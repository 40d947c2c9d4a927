use std::collections::HashSet;

use oppnet::graph::*;
use oppnet::seeding::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_community(rng: &mut ChaCha8Rng, n: usize) -> ContactGraph {
    let mut pairs = HashSet::new();
    for v in 1..n {
        pairs.insert((rng.random_range(0..v), v));
    }
    for _ in 0..n {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    // a few distinct weights so equal-length paths are common
    let edges = pairs
        .into_iter()
        .map(|(u, v)| Edge {
            u,
            v,
            w: [0.5, 1.0, 2.0][rng.random_range(0..3)],
        })
        .collect();
    ContactGraph::new(vec![0; n], edges).unwrap()
}

/// Every simple path between every pair, by depth-first search.
fn all_paths(g: &ContactGraph) -> Vec<Vec<Vec<(Vec<usize>, f64)>>> {
    let n = g.n();
    let mut out = vec![vec![Vec::new(); n]; n];
    fn dfs(g: &ContactGraph, path: &mut Vec<usize>, len: f64, out: &mut Vec<Vec<Vec<(Vec<usize>, f64)>>>) {
        let last = *path.last().unwrap();
        out[path[0]][last].push((path.clone(), len));
        for &(u, _) in g.neighbors(last) {
            if !path.contains(&u) {
                path.push(u);
                dfs(g, path, len + 1.0 / g.weight(last, u).unwrap(), out);
                path.pop();
            }
        }
    }
    for s in 0..n {
        dfs(g, &mut vec![s], 0.0, &mut out);
    }
    out
}

fn oracle(g: &ContactGraph) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = g.n();
    let paths = all_paths(g);
    let shortest = |s: usize, t: usize| -> Vec<&Vec<usize>> {
        let best = paths[s][t].iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        paths[s][t].iter().filter(|p| p.1 <= best * (1.0 + 1e-12)).map(|p| &p.0).collect()
    };
    let unit = g.edges().iter().map(|e| 1.0 / e.w).fold(f64::INFINITY, f64::min);
    let mut between = vec![0.0; n];
    let mut close = vec![0.0; n];
    for s in 0..n {
        let mut total = 0.0;
        for t in 0..n {
            if s == t {
                continue;
            }
            let sp = shortest(s, t);
            total += paths[s][t].iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            if s < t {
                for v in 0..n {
                    if v != s && v != t {
                        let through = sp.iter().filter(|p| p.contains(&v)).count();
                        between[v] += through as f64 / sp.len() as f64;
                    }
                }
            }
        }
        close[s] = (n - 1) as f64 * unit / total;
    }
    let pairs = ((n - 1) * (n - 2)) as f64 / 2.0;
    between.iter_mut().for_each(|b| *b /= pairs);
    let degree = (0..n).map(|v| g.degree(v) as f64 / (n - 1) as f64).collect();
    (degree, between, close)
}

#[test]
fn centralities_match_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let g = random_community(&mut rng, 10);
        let s = compute_centralities(&g, 0).unwrap();
        let (d, b, c) = oracle(&g);
        for v in 0..10 {
            assert!((s.degree[v] - d[v]).abs() < 1e-12);
            assert!((s.betweenness[v] - b[v]).abs() < 1e-9, "{} vs {}", s.betweenness[v], b[v]);
            assert!((s.closeness[v] - c[v]).abs() < 1e-9);
        }
        let agg: Vec<f64> = (0..10).map(|v| d[v] + b[v] + c[v]).collect();
        let best = agg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expected = (0..10).find(|&v| (agg[v] - best).abs() < 1e-9).unwrap();
        assert_eq!(select_mcu(&s), expected);
    }
}

#[test]
fn mcu_ignores_weight_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let g = generate(&GraphParams::default()).unwrap().0;
    let base = mcus(&g).unwrap();
    for factor in [0.25, 3.0, 8.0] {
        let w: Vec<f64> = g.edges().iter().map(|e| e.w * factor).collect();
        assert_eq!(mcus(&g.with_weights(&w).unwrap()).unwrap(), base);
    }
    for _ in 0..10 {
        let g = random_community(&mut rng, 10);
        let w: Vec<f64> = g.edges().iter().map(|e| e.w * 5.0).collect();
        assert_eq!(mcus(&g.with_weights(&w).unwrap()).unwrap(), mcus(&g).unwrap());
    }
}

#[test]
fn default_graph_totals() {
    let g = generate(&GraphParams::default()).unwrap().0;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cases = [
        (SeedingScheme::CommunityPct(1.0), 1120),
        (SeedingScheme::CommunityPct(1.5), 1680),
        (SeedingScheme::CommunityPct(0.9), 1008),
        (SeedingScheme::CommunityPct(0.8), 896),
        (SeedingScheme::RandomNetwork, 1120),
        (SeedingScheme::S1(CentralityKind::Betweenness), 1120),
        (SeedingScheme::S2Mcu, 1120),
    ];
    for (scheme, total) in cases {
        let plan = build_plan(&g, 80, scheme, &mut rng).unwrap();
        assert_eq!(plan.total(), total, "{scheme}");
        assert_eq!(plan.allocations(g.n()).iter().sum::<usize>(), total);
    }
    let s2 = seed_s2(&g, 80).unwrap();
    let alloc = s2.allocations(g.n());
    assert_eq!(alloc.iter().filter(|&&c| c > 0).count(), 14);
    assert!(alloc.iter().all(|&c| c == 0 || c == 80));
}

#[test]
fn community_plans_cover_the_file() {
    let g = generate(&GraphParams::default()).unwrap().0;
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for p in [0.8, 1.0] {
        let plan = seed_community_pct(&g, 80, p, &mut rng).unwrap();
        for c in 0..g.n_communities() {
            let ids: Vec<usize> = plan
                .placements
                .iter()
                .filter(|pl| g.community_of(pl.node) == c)
                .map(|pl| pl.packet)
                .collect();
            let distinct: HashSet<usize> = ids.iter().copied().collect();
            assert_eq!(distinct.len(), ids.len());
            assert_eq!(ids.len(), (p * 80.0) as usize);
        }
    }
    let plan = seed_s1(&g, 80, CentralityKind::Closeness, &mut rng).unwrap();
    for c in 0..g.n_communities() {
        let distinct: HashSet<usize> = plan
            .placements
            .iter()
            .filter(|pl| g.community_of(pl.node) == c)
            .map(|pl| pl.packet)
            .collect();
        assert_eq!(distinct.len(), 80);
    }
}

#[test]
fn random_allocations_conserve() {
    let g = generate(&GraphParams::default()).unwrap().0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = seed_random_network(&g, 80, 14, &mut rng).unwrap();
        assert_eq!(plan.allocations(g.n()).iter().sum::<usize>(), 1120);
    }
}

#[test]
fn one_community_random_equals_full_seeding() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let g = random_community(&mut rng, 10);
    for seed in 0..10 {
        let a = seed_random_network(&g, 12, 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = seed_community_pct(&g, 12, 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(a.placements, b.placements);
    }
}

#[test]
fn s1_follows_the_scores() {
    let g = generate(&GraphParams::default()).unwrap().0;
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for kind in [CentralityKind::Degree, CentralityKind::Betweenness, CentralityKind::Closeness] {
        let plan = seed_s1(&g, 80, kind, &mut rng).unwrap();
        let alloc = plan.allocations(g.n());
        for c in 0..g.n_communities() {
            let s = compute_centralities(&g, c).unwrap();
            let scores = s.of(kind);
            let total: f64 = scores.iter().sum();
            for (i, &v) in s.nodes.iter().enumerate() {
                let exact = if total > 0.0 {
                    scores[i] / total * 80.0
                } else {
                    80.0 / s.nodes.len() as f64
                };
                assert!((alloc[v] as f64 - exact).abs() < 1.0, "{kind}: {} vs {exact}", alloc[v]);
            }
        }
    }
}

//! Strength-driven weight assignment.
//!
//! Each node gets strength `s = degree^beta`, split into an internal part
//! `(1 - mu_w) s` and an external part `mu_w s`. Edge weights start from the
//! endpoints' average per-edge share and are then rebalanced by Jacobi sweeps
//! that push each node's intra (and inter) weight sum toward its target.

use serde::{Deserialize, Serialize};

use super::{ContactGraph, GraphError};

pub const WEIGHT_FLOOR: f64 = 1e-6;
const MAX_SWEEPS: usize = 20;
const TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthSplit {
    pub s: f64,
    pub s_in: f64,
    pub s_out: f64,
}

impl StrengthSplit {
    pub fn new(degree: usize, mu_w: f64, beta: f64) -> Self {
        let s = (degree as f64).powf(beta);
        let s_out = mu_w * s;
        Self { s, s_in: s - s_out, s_out }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub sweeps: usize,
    /// Largest `|achieved - target| / s` over nodes and both halves.
    pub max_residual: f64,
    /// Share of nodes whose internal residual is within tolerance.
    pub within_tolerance: f64,
    pub splits: Vec<StrengthSplit>,
    pub warnings: Vec<String>,
}

/// Weighted copy of `topology`. Both halves of the split are solved
/// independently since intra and inter edges never share a target.
pub fn assign_weights(topology: &ContactGraph, mu_w: f64, beta: f64) -> Result<(ContactGraph, WeightReport), GraphError> {
    if !(0.0..1.0).contains(&mu_w) {
        return Err(GraphError::InvalidParams(format!("mu_w must lie in [0,1), got {mu_w}")));
    }
    let n = topology.n();
    let edges = topology.edges();
    let intra: Vec<bool> = edges.iter().map(|e| topology.is_intra(e)).collect();
    let mut d_in = vec![0usize; n];
    let mut d_out = vec![0usize; n];
    for (e, &is_in) in edges.iter().zip(&intra) {
        let d = if is_in { &mut d_in } else { &mut d_out };
        d[e.u] += 1;
        d[e.v] += 1;
    }

    let mut warnings = Vec::new();
    let splits: Vec<StrengthSplit> = (0..n)
        .map(|v| {
            let mut sp = StrengthSplit::new(topology.degree(v), mu_w, beta);
            if d_in[v] == 0 && sp.s_in > 0.0 {
                warnings.push(format!("node {v} has no internal edges; internal strength moved outside"));
                sp.s_out = sp.s;
                sp.s_in = 0.0;
            } else if d_out[v] == 0 && sp.s_out > 0.0 {
                warnings.push(format!("node {v} has no external edges; external strength moved inside"));
                sp.s_in = sp.s;
                sp.s_out = 0.0;
            }
            sp
        })
        .collect();
    let target = |v: usize, is_in: bool| if is_in { splits[v].s_in } else { splits[v].s_out };
    let deg = |v: usize, is_in: bool| if is_in { d_in[v] } else { d_out[v] } as f64;

    let mut w: Vec<f64> = edges
        .iter()
        .zip(&intra)
        .map(|(e, &k)| {
            let share = 0.5 * (target(e.u, k) / deg(e.u, k) + target(e.v, k) / deg(e.v, k));
            share.max(WEIGHT_FLOOR)
        })
        .collect();

    let residuals = |w: &[f64]| {
        let mut r_in = vec![0.0; n];
        let mut r_out = vec![0.0; n];
        for v in 0..n {
            r_in[v] = splits[v].s_in;
            r_out[v] = splits[v].s_out;
        }
        for ((e, &k), &x) in edges.iter().zip(&intra).zip(w) {
            let r = if k { &mut r_in } else { &mut r_out };
            r[e.u] -= x;
            r[e.v] -= x;
        }
        (r_in, r_out)
    };
    let worst = |r_in: &[f64], r_out: &[f64]| {
        (0..n)
            .filter(|&v| splits[v].s > 0.0)
            .map(|v| r_in[v].abs().max(r_out[v].abs()) / splits[v].s)
            .fold(0.0, f64::max)
    };

    let mut sweeps = 0;
    let (mut r_in, mut r_out) = residuals(&w);
    while sweeps < MAX_SWEEPS && worst(&r_in, &r_out) >= TOLERANCE {
        for ((e, &k), x) in edges.iter().zip(&intra).zip(w.iter_mut()) {
            let r = if k { &r_in } else { &r_out };
            let dw = 0.5 * (r[e.u] / deg(e.u, k) + r[e.v] / deg(e.v, k));
            *x = (*x + dw).max(WEIGHT_FLOOR);
        }
        sweeps += 1;
        (r_in, r_out) = residuals(&w);
    }

    let ok = (0..n)
        .filter(|&v| splits[v].s == 0.0 || r_in[v].abs() / splits[v].s <= TOLERANCE)
        .count();
    let report = WeightReport {
        sweeps,
        max_residual: worst(&r_in, &r_out),
        within_tolerance: if n == 0 { 1.0 } else { ok as f64 / n as f64 },
        splits,
        warnings,
    };
    Ok((topology.with_weights(&w)?, report))
}

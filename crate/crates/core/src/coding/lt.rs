//! LT fountain codes: Robust Soliton degree distribution, encoder and an
//! incremental peeling decoder.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{xor_into, CodingError, FilePayload};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub k: usize,
    pub c: f64,
    pub delta: f64,
}

impl SolitonParams {
    pub fn new(k: usize, c: f64, delta: f64) -> Result<Self, CodingError> {
        if k == 0 {
            return Err(CodingError::InvalidSoliton("k must be at least 1".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(CodingError::InvalidSoliton(format!("c must be positive, got {c}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CodingError::InvalidSoliton(format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(Self { k, c, delta })
    }

    /// Admissible band for `c`: `[sqrt(k)/((k-1) ln(k/delta)), sqrt(k)/(2 ln(k/delta))]`.
    pub fn c_band(k: usize, delta: f64) -> (f64, f64) {
        let kf = k as f64;
        let base = kf.sqrt() / (kf / delta).ln();
        let lo = if k > 1 { base / (kf - 1.0) } else { f64::INFINITY };
        (lo, base / 2.0)
    }

    /// Parameters with `c` at the midpoint of the admissible band.
    pub fn midband(k: usize, delta: f64) -> Result<Self, CodingError> {
        let (lo, hi) = Self::c_band(k, delta);
        let c = if k > 1 { 0.5 * (lo + hi) } else { hi };
        Self::new(k, c, delta)
    }

    /// `R = c ln(k/delta) sqrt(k)`.
    pub fn ripple(&self) -> f64 {
        let kf = self.k as f64;
        self.c * (kf / self.delta).ln() * kf.sqrt()
    }

    /// Warning text when `c` falls outside the admissible band. Out-of-band
    /// values are still usable.
    pub fn band_warning(&self) -> Option<String> {
        let (lo, hi) = Self::c_band(self.k, self.delta);
        (self.k > 1 && !(lo..=hi).contains(&self.c))
            .then(|| format!("c = {} outside admissible band [{lo:.6}, {hi:.6}]", self.c))
    }

    /// Symbol budget `k + ceil(ln^2(k/delta) sqrt(k))`, the success bound with
    /// its hidden constant set to one.
    pub fn overhead_symbols(&self) -> usize {
        let kf = self.k as f64;
        self.k + ((kf / self.delta).ln().powi(2) * kf.sqrt()).ceil() as usize
    }
}

/// The Robust Soliton distribution `mu(i) = (rho(i) + tau(i)) / beta`.
#[derive(Clone, Debug)]
pub struct RobustSoliton {
    rho: Vec<f64>,
    tau: Vec<f64>,
    mu: Vec<f64>,
    cdf: Vec<f64>,
    spike: usize,
}

impl RobustSoliton {
    pub fn new(params: &SolitonParams) -> Result<Self, CodingError> {
        Self::with_tau_weight(params, 1.0)
    }

    /// `tau_weight = 0` degenerates to the ideal soliton.
    pub(crate) fn with_tau_weight(params: &SolitonParams, tau_weight: f64) -> Result<Self, CodingError> {
        let k = params.k;
        let kf = k as f64;
        let rho = ideal_soliton(k);
        let mut tau = vec![0.0; k];
        let spike;
        if k == 1 {
            spike = 1;
        } else {
            let r = params.ripple();
            let ratio = kf / r;
            if ratio < 1.0 {
                return Err(CodingError::InvalidSoliton(format!(
                    "k/R = {ratio:.4} < 1; the distribution is undefined"
                )));
            }
            spike = (ratio.round() as usize).clamp(1, k);
            let spike_mass = r * (r / params.delta).ln() / kf;
            if spike_mass < 0.0 {
                return Err(CodingError::InvalidSoliton(format!(
                    "R = {r:.4} below delta gives a negative spike"
                )));
            }
            for i in 1..spike {
                tau[i - 1] = r / (i as f64 * kf);
            }
            tau[spike - 1] = spike_mass;
        }
        tau.iter_mut().for_each(|t| *t *= tau_weight);
        let beta: f64 = rho.iter().zip(&tau).map(|(a, b)| a + b).sum();
        let mu: Vec<f64> = rho.iter().zip(&tau).map(|(a, b)| (a + b) / beta).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = mu
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(Self { rho, tau, mu, cdf, spike })
    }

    /// `mu[d-1]` is the probability of degree `d`.
    pub fn probabilities(&self) -> &[f64] {
        &self.mu
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Degree at which `tau` places its spike.
    pub fn spike(&self) -> usize {
        self.spike
    }

    pub fn sample_degree<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.mu.len() - 1) + 1
    }
}

/// `rho(1) = 1/k`, `rho(i) = 1/(i(i-1))`.
pub fn ideal_soliton(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| if i == 1 { 1.0 / k as f64 } else { 1.0 / (i * (i - 1)) as f64 })
        .collect()
}

pub fn robust_soliton(params: &SolitonParams) -> Result<Vec<f64>, CodingError> {
    Ok(RobustSoliton::new(params)?.mu)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LtSymbol {
    pub id: usize,
    /// Sorted, distinct source packet indices.
    pub neighbors: Vec<usize>,
    pub payload: Vec<u8>,
}

impl LtSymbol {
    pub fn from_neighbors(id: usize, file: &FilePayload, mut neighbors: Vec<usize>) -> Self {
        neighbors.sort_unstable();
        neighbors.dedup();
        let mut payload = vec![0u8; file.packet_size()];
        for &n in &neighbors {
            xor_into(&mut payload, file.packet(n));
        }
        Self { id, neighbors, payload }
    }

    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }
}

/// Stateful encoder that hands out unique symbol ids.
#[derive(Clone, Debug)]
pub struct LtEncoder {
    dist: RobustSoliton,
    next_id: usize,
}

impl LtEncoder {
    pub fn new(params: &SolitonParams) -> Result<Self, CodingError> {
        Ok(Self {
            dist: RobustSoliton::new(params)?,
            next_id: 0,
        })
    }

    pub fn distribution(&self) -> &RobustSoliton {
        &self.dist
    }

    pub fn encode<R: Rng + ?Sized>(&mut self, file: &FilePayload, rng: &mut R) -> LtSymbol {
        let degree = self.dist.sample_degree(rng).min(file.k());
        let neighbors = index::sample(rng, file.k(), degree).into_vec();
        let id = self.next_id;
        self.next_id += 1;
        LtSymbol::from_neighbors(id, file, neighbors)
    }
}

/// One-shot encode with a fresh distribution. Prefer [`LtEncoder`] in loops.
pub fn lt_encode<R: Rng + ?Sized>(
    file: &FilePayload,
    params: &SolitonParams,
    id: usize,
    rng: &mut R,
) -> Result<LtSymbol, CodingError> {
    let mut enc = LtEncoder::new(params)?;
    enc.next_id = id;
    Ok(enc.encode(file, rng))
}

#[derive(Clone, Debug)]
struct Pending {
    remaining: Vec<usize>,
    payload: Vec<u8>,
    done: bool,
}

/// Incremental peeling decoder. Any symbol that reduces to a single unknown
/// neighbor releases that packet, which is then XORed out of every other
/// pending symbol until no degree-one symbol remains.
#[derive(Clone, Debug)]
pub struct PeelingDecoder {
    k: usize,
    packet_size: usize,
    recovered: Vec<Option<Vec<u8>>>,
    recovered_count: usize,
    pending: Vec<Pending>,
    by_packet: Vec<Vec<usize>>,
}

impl PeelingDecoder {
    pub fn new(k: usize, packet_size: usize) -> Self {
        Self {
            k,
            packet_size,
            recovered: vec![None; k],
            recovered_count: 0,
            pending: Vec::new(),
            by_packet: vec![Vec::new(); k],
        }
    }

    pub fn recovered_count(&self) -> usize {
        self.recovered_count
    }

    pub fn is_complete(&self) -> bool {
        self.recovered_count == self.k
    }

    pub fn is_recovered(&self, packet: usize) -> bool {
        self.recovered[packet].is_some()
    }

    /// Feed one symbol; returns how many packets became known.
    pub fn add(&mut self, symbol: &LtSymbol) -> Result<usize, CodingError> {
        if symbol.payload.len() != self.packet_size {
            return Err(CodingError::PayloadMismatch {
                expected: self.packet_size,
                got: symbol.payload.len(),
            });
        }
        if symbol.neighbors.is_empty() || symbol.neighbors.iter().any(|&n| n >= self.k) {
            return Err(CodingError::Integrity(format!(
                "symbol {} has neighbors outside [0, {})",
                symbol.id, self.k
            )));
        }
        let before = self.recovered_count;
        let mut payload = symbol.payload.clone();
        let mut remaining = Vec::with_capacity(symbol.neighbors.len());
        for &n in &symbol.neighbors {
            match &self.recovered[n] {
                Some(v) => xor_into(&mut payload, v),
                None => remaining.push(n),
            }
        }
        match remaining.len() {
            0 => {
                if payload.iter().any(|&b| b != 0) {
                    return Err(CodingError::Integrity(format!(
                        "symbol {} disagrees with already recovered packets",
                        symbol.id
                    )));
                }
            }
            1 => self.release(remaining[0], payload)?,
            _ => {
                let idx = self.pending.len();
                for &n in &remaining {
                    self.by_packet[n].push(idx);
                }
                self.pending.push(Pending {
                    remaining,
                    payload,
                    done: false,
                });
            }
        }
        Ok(self.recovered_count - before)
    }

    fn release(&mut self, packet: usize, value: Vec<u8>) -> Result<(), CodingError> {
        let mut work = vec![(packet, value)];
        while let Some((p, v)) = work.pop() {
            if let Some(existing) = &self.recovered[p] {
                if *existing != v {
                    return Err(CodingError::Integrity(format!(
                        "two derivations of packet {p} disagree"
                    )));
                }
                continue;
            }
            for idx in std::mem::take(&mut self.by_packet[p]) {
                let pend = &mut self.pending[idx];
                if pend.done {
                    continue;
                }
                if let Some(pos) = pend.remaining.iter().position(|&n| n == p) {
                    pend.remaining.swap_remove(pos);
                    xor_into(&mut pend.payload, &v);
                }
                match pend.remaining.len() {
                    0 => {
                        pend.done = true;
                        if pend.payload.iter().any(|&b| b != 0) {
                            return Err(CodingError::Integrity(format!(
                                "redundant symbol disagrees after recovering packet {p}"
                            )));
                        }
                    }
                    1 => {
                        pend.done = true;
                        work.push((pend.remaining[0], std::mem::take(&mut pend.payload)));
                    }
                    _ => {}
                }
            }
            self.recovered[p] = Some(v);
            self.recovered_count += 1;
        }
        Ok(())
    }

    pub fn decoded(&self) -> Option<FilePayload> {
        if !self.is_complete() {
            return None;
        }
        FilePayload::new(self.recovered.iter().map(|p| p.clone().unwrap_or_default()).collect()).ok()
    }

    pub fn clear(&mut self) {
        *self = Self::new(self.k, self.packet_size);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeelOutcome {
    pub decoded: Option<FilePayload>,
    pub recovered_count: usize,
}

/// Batch peeling decode. The recovered set is the closure of the peeling rule,
/// so the result does not depend on symbol order.
pub fn lt_peel_decode(symbols: &[LtSymbol], k: usize, packet_size: usize) -> Result<PeelOutcome, CodingError> {
    let mut dec = PeelingDecoder::new(k, packet_size);
    for s in symbols {
        dec.add(s)?;
    }
    Ok(PeelOutcome {
        decoded: dec.decoded(),
        recovered_count: dec.recovered_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ideal_soliton_k4() {
        let rho = ideal_soliton(4);
        let expect = [0.25, 0.5, 1.0 / 6.0, 1.0 / 12.0];
        for (a, b) in rho.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn robust_soliton_normalizes() {
        for k in [10usize, 80, 500] {
            let p = SolitonParams::midband(k, 0.5).unwrap();
            let mu = robust_soliton(&p).unwrap();
            let sum: f64 = mu.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "k={k} sum={sum}");
            assert!(mu.iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn spike_position_is_rounded_k_over_r() {
        let p = SolitonParams::new(80, 0.1, 0.5).unwrap();
        let d = RobustSoliton::new(&p).unwrap();
        assert_eq!(d.spike(), (80.0 / p.ripple()).round() as usize);
    }

    #[test]
    fn k_over_r_below_one_is_rejected() {
        let p = SolitonParams::new(10, 5.0, 0.5).unwrap();
        assert!(matches!(RobustSoliton::new(&p), Err(CodingError::InvalidSoliton(_))));
    }

    #[test]
    fn zero_tau_reduces_to_ideal_soliton() {
        let p = SolitonParams::midband(40, 0.3).unwrap();
        let d = RobustSoliton::with_tau_weight(&p, 0.0).unwrap();
        let rho = ideal_soliton(40);
        let total: f64 = rho.iter().sum();
        for (m, r) in d.probabilities().iter().zip(&rho) {
            assert!((m - r / total).abs() < 1e-15);
        }
    }

    #[test]
    fn band_warning_only_out_of_band() {
        assert!(SolitonParams::midband(80, 0.5).unwrap().band_warning().is_none());
        assert!(SolitonParams::new(80, 5.0, 0.5).unwrap().band_warning().is_some());
    }

    #[test]
    fn degree_one_symbol_is_the_packet() {
        let f = FilePayload::random(6, 12, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let s = LtSymbol::from_neighbors(0, &f, vec![3]);
        assert_eq!(s.payload, f.packet(3));
    }

    #[test]
    fn neighbors_are_distinct_and_sized() {
        let f = FilePayload::random(80, 0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut enc = LtEncoder::new(&SolitonParams::midband(80, 0.5).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let s = enc.encode(&f, &mut rng);
            let mut n = s.neighbors.clone();
            n.dedup();
            assert_eq!(n.len(), s.degree());
            assert!((1..=80).contains(&s.degree()));
        }
    }

    #[test]
    fn all_singletons_decode() {
        let f = FilePayload::random(10, 8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let syms: Vec<_> = (0..10).map(|i| LtSymbol::from_neighbors(i, &f, vec![i])).collect();
        let out = lt_peel_decode(&syms, 10, 8).unwrap();
        assert_eq!(out.recovered_count, 10);
        assert_eq!(out.decoded.unwrap(), f);
    }

    #[test]
    fn lone_degree_two_recovers_nothing() {
        let f = FilePayload::random(10, 8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let out = lt_peel_decode(&[LtSymbol::from_neighbors(0, &f, vec![2, 7])], 10, 8).unwrap();
        assert_eq!(out.recovered_count, 0);
        assert!(out.decoded.is_none());
    }

    #[test]
    fn inconsistent_symbols_are_flagged() {
        let f = FilePayload::random(4, 8, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let a = LtSymbol::from_neighbors(0, &f, vec![1]);
        let mut b = LtSymbol::from_neighbors(1, &f, vec![1, 2]);
        let c = LtSymbol::from_neighbors(2, &f, vec![2]);
        b.payload[0] ^= 1;
        let err = lt_peel_decode(&[a, b, c], 4, 8).unwrap_err();
        assert!(matches!(err, CodingError::Integrity(_)));
    }

    #[test]
    fn peeling_is_order_invariant() {
        let f = FilePayload::random(30, 4, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let mut enc = LtEncoder::new(&SolitonParams::midband(30, 0.5).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..50 {
            let mut syms: Vec<_> = (0..25 + trial % 20).map(|_| enc.encode(&f, &mut rng)).collect();
            let base = lt_peel_decode(&syms, 30, 4).unwrap().recovered_count;
            for _ in 0..5 {
                syms.shuffle(&mut rng);
                assert_eq!(lt_peel_decode(&syms, 30, 4).unwrap().recovered_count, base);
            }
        }
    }
}

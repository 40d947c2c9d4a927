//! Random linear network coding over GF(256).
//!
//! A decoder keeps its rows in reduced row-echelon form, so an incoming packet
//! is innovative exactly when it survives reduction against the stored pivots.
//! Once the rank reaches `k` every row is a unit vector and the payloads are
//! the original packets, which is the same as solving `P = C^-1 P'`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gf256, CodingError, FilePayload};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RlncPacket {
    pub coeffs: Vec<u8>,
    pub payload: Vec<u8>,
}

impl RlncPacket {
    /// Encode `file` with an explicit coefficient vector.
    pub fn encode(file: &FilePayload, coeffs: Vec<u8>) -> Result<Self, CodingError> {
        if coeffs.len() != file.k() {
            return Err(CodingError::LengthMismatch {
                expected: file.k(),
                got: coeffs.len(),
            });
        }
        let mut payload = vec![0u8; file.packet_size()];
        for (c, p) in coeffs.iter().zip(file.packets()) {
            gf256::axpy(&mut payload, *c, p);
        }
        Ok(Self { coeffs, payload })
    }

    /// The `i`-th source packet carried as the unit vector `e_i`.
    pub fn unit(file: &FilePayload, i: usize) -> Self {
        let mut coeffs = vec![0u8; file.k()];
        coeffs[i] = 1;
        Self {
            coeffs,
            payload: file.packet(i).to_vec(),
        }
    }

    /// A dense combination with uniformly random coefficients (never all zero).
    pub fn random<R: Rng + ?Sized>(file: &FilePayload, rng: &mut R) -> Self {
        loop {
            let coeffs: Vec<u8> = (0..file.k()).map(|_| rng.random()).collect();
            if coeffs.iter().any(|&c| c != 0) {
                return Self::encode(file, coeffs).expect("length matches by construction");
            }
        }
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }
}

/// Combine `buffer` with explicit multipliers `draws` (one per packet).
pub fn recombine_with(buffer: &[RlncPacket], draws: &[u8]) -> Result<RlncPacket, CodingError> {
    let first = buffer.first().ok_or(CodingError::EmptyBuffer)?;
    if draws.len() != buffer.len() {
        return Err(CodingError::LengthMismatch {
            expected: buffer.len(),
            got: draws.len(),
        });
    }
    let mut out = RlncPacket {
        coeffs: vec![0; first.coeffs.len()],
        payload: vec![0; first.payload.len()],
    };
    for (p, &r) in buffer.iter().zip(draws) {
        gf256::axpy(&mut out.coeffs, r, &p.coeffs);
        gf256::axpy(&mut out.payload, r, &p.payload);
    }
    Ok(out)
}

/// Random linear combination of a node's buffer. Multipliers are uniform over
/// GF(256); a draw whose combined coefficient vector is all zero is redrawn.
pub fn rlnc_recombine<R: Rng + ?Sized>(buffer: &[RlncPacket], rng: &mut R) -> Result<RlncPacket, CodingError> {
    if buffer.is_empty() {
        return Err(CodingError::EmptyBuffer);
    }
    if buffer.iter().all(|p| p.coeffs.iter().all(|&c| c == 0)) {
        return Err(CodingError::DegenerateBuffer);
    }
    let mut draws = vec![0u8; buffer.len()];
    loop {
        draws.iter_mut().for_each(|d| *d = rng.random());
        let out = recombine_with(buffer, &draws)?;
        if out.coeffs.iter().any(|&c| c != 0) {
            return Ok(out);
        }
    }
}

#[derive(Clone, Debug)]
pub struct RlncDecoder {
    k: usize,
    packet_size: usize,
    rows: Vec<RlncPacket>,
    pivots: Vec<usize>,
    has_pivot: Vec<bool>,
}

impl RlncDecoder {
    pub fn new(k: usize, packet_size: usize) -> Self {
        Self {
            k,
            packet_size,
            rows: Vec::with_capacity(k),
            pivots: Vec::with_capacity(k),
            has_pivot: vec![false; k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.k
    }

    /// Stored basis rows. Any uniform combination of them is uniform over the
    /// span of everything ingested so far.
    pub fn rows(&self) -> &[RlncPacket] {
        &self.rows
    }

    fn check(&self, p: &RlncPacket) -> Result<(), CodingError> {
        if p.coeffs.len() != self.k {
            return Err(CodingError::LengthMismatch {
                expected: self.k,
                got: p.coeffs.len(),
            });
        }
        if p.payload.len() != self.packet_size {
            return Err(CodingError::PayloadMismatch {
                expected: self.packet_size,
                got: p.payload.len(),
            });
        }
        Ok(())
    }

    fn reduce_coeffs(&self, coeffs: &mut [u8]) {
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            let c = coeffs[pc];
            if c != 0 {
                gf256::axpy(coeffs, c, &row.coeffs);
            }
        }
    }

    /// Whether `coeffs` lies outside the current row space. Does not mutate.
    pub fn is_innovative(&self, coeffs: &[u8]) -> Result<bool, CodingError> {
        if coeffs.len() != self.k {
            return Err(CodingError::LengthMismatch {
                expected: self.k,
                got: coeffs.len(),
            });
        }
        if self.is_complete() {
            return Ok(false);
        }
        let mut v = coeffs.to_vec();
        self.reduce_coeffs(&mut v);
        Ok(v.iter().any(|&c| c != 0))
    }

    /// Add a packet; returns whether it increased the rank.
    pub fn ingest(&mut self, p: &RlncPacket) -> Result<bool, CodingError> {
        self.check(p)?;
        if self.is_complete() {
            return Ok(false);
        }
        let mut v = p.clone();
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            let c = v.coeffs[pc];
            if c != 0 {
                gf256::axpy(&mut v.coeffs, c, &row.coeffs);
                gf256::axpy(&mut v.payload, c, &row.payload);
            }
        }
        let Some(pivot) = v.coeffs.iter().position(|&c| c != 0) else {
            if v.payload.iter().any(|&b| b != 0) {
                return Err(CodingError::Integrity(
                    "packet is in the row space but its payload disagrees".into(),
                ));
            }
            return Ok(false);
        };
        let norm = gf256::inv(v.coeffs[pivot])?;
        gf256::scale(&mut v.coeffs, norm);
        gf256::scale(&mut v.payload, norm);
        for row in &mut self.rows {
            let c = row.coeffs[pivot];
            if c != 0 {
                gf256::axpy(&mut row.coeffs, c, &v.coeffs);
                gf256::axpy(&mut row.payload, c, &v.payload);
            }
        }
        self.rows.push(v);
        self.pivots.push(pivot);
        self.has_pivot[pivot] = true;
        Ok(true)
    }

    /// The original packets, once rank reaches `k`.
    pub fn decoded(&self) -> Option<FilePayload> {
        if !self.is_complete() {
            return None;
        }
        let mut packets = vec![Vec::new(); self.k];
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            packets[pc] = row.payload.clone();
        }
        FilePayload::new(packets).ok()
    }

    pub fn clear(&mut self) {
        self.rows.clear();
        self.pivots.clear();
        self.has_pivot.iter_mut().for_each(|h| *h = false);
    }
}

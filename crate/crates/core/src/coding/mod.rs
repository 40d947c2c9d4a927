//! Finite-field arithmetic, random linear network coding and LT fountain codes.

pub mod gf256;
pub mod lt;
pub mod rlnc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lt::{lt_encode, lt_peel_decode, LtEncoder, LtSymbol, PeelOutcome, PeelingDecoder, RobustSoliton, SolitonParams};
pub use rlnc::{rlnc_recombine, RlncDecoder, RlncPacket};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error("zero has no multiplicative inverse in GF(256)")]
    ZeroInverse,
    #[error("cannot recombine an empty buffer")]
    EmptyBuffer,
    #[error("buffer holds only all-zero coefficient vectors")]
    DegenerateBuffer,
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("payload has length {got}, expected {expected}")]
    PayloadMismatch { expected: usize, got: usize },
    #[error("invalid file: {0}")]
    InvalidFile(String),
    #[error("invalid soliton parameters: {0}")]
    InvalidSoliton(String),
    #[error("integrity failure: {0}")]
    Integrity(String),
}

/// The content being disseminated: `k` equally sized packets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilePayload {
    packet_size: usize,
    packets: Vec<Vec<u8>>,
}

impl FilePayload {
    pub fn new(packets: Vec<Vec<u8>>) -> Result<Self, CodingError> {
        let Some(first) = packets.first() else {
            return Err(CodingError::InvalidFile("file needs at least one packet".into()));
        };
        let packet_size = first.len();
        if let Some(bad) = packets.iter().position(|p| p.len() != packet_size) {
            return Err(CodingError::InvalidFile(format!(
                "packet {bad} has length {}, expected {packet_size}",
                packets[bad].len()
            )));
        }
        Ok(Self { packet_size, packets })
    }

    pub fn random<R: Rng + ?Sized>(k: usize, packet_size: usize, rng: &mut R) -> Result<Self, CodingError> {
        let packets = (0..k)
            .map(|_| (0..packet_size).map(|_| rng.random::<u8>()).collect())
            .collect();
        Self::new(packets)
    }

    pub fn k(&self) -> usize {
        self.packets.len()
    }

    pub fn packet_size(&self) -> usize {
        self.packet_size
    }

    pub fn packet(&self, i: usize) -> &[u8] {
        &self.packets[i]
    }

    pub fn packets(&self) -> &[Vec<u8>] {
        &self.packets
    }
}

pub(crate) fn xor_into(dst: &mut [u8], src: &[u8]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
}

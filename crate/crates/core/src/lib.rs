//! Simulation of content dissemination over community-structured
//! opportunistic networks.

pub mod coding;
pub mod engine;
pub mod graph;
pub mod idset;
pub mod metrics;
pub mod seeding;
pub mod strategies;

pub use idset::IdSet;

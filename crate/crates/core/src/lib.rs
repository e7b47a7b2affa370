//! Schrödinger operators `Δ + W + V` on weighted graphs: Morse index,
//! ground-state (Doob) transforms, Birman–Schwinger counting, Green kernels
//! and parabolicity, Neumann bracketing and CLR-type scaling probes.

pub mod alternatives;
pub mod birman_schwinger;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod operator;
pub mod parabolicity;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};

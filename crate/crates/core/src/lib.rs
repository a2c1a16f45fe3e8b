//! Statistics of bipartite purity and of the potential of multipartite
//! entanglement for random pure states of `n` qubits.
//!
//! Haar-typical states are compared against Hadamard states (flat moduli)
//! whose phases are drawn from the `q`-th roots of unity (Butson `P_q`
//! ensembles; `q = 2` gives hypergraph states) or from the whole circle.

pub mod analytics;
pub mod bitcomb;
pub mod cli;
pub mod error;
pub mod purity;
pub mod search;
pub mod states;
pub mod stats;
mod sum;

pub use error::{Error, Result};

//! Statevector simulation and geometric trainability diagnostics for
//! parameterized quantum circuits.

pub mod algebra;
pub mod circuit;
mod error;
pub mod geometry;
pub mod lie;
pub mod robustness;
pub mod stats;
pub mod trainability;

pub use error::{Error, Result};

/// Largest register the dense kernels accept.
pub const MAX_QUBITS: usize = 12;

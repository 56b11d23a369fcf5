//! Lie closure of circuit generators, truncations and truncated models.

mod closure;
mod model;
mod trunc;

pub use closure::{default_tolerance, lie_closure, LieBasis};
pub use model::{
    circuit_closure, lie_trunc_model, random_trunc_model, truncated_circuit, LieTruncOptions, Parameterization,
    RandomTruncOptions, SingleExpModel, TruncatedCircuit, TruncatedModel,
};
pub use trunc::{distinct_directions, lie_trunc, random_trunc, TruncationReport};

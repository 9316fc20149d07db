//! Smooth dyadic frequency decomposition and Besov-type norms with
//! logarithmic weights, plus ensemble verifiers for the classical inequalities
//! (Bernstein, interpolation, embeddings).

mod besov;
mod partition;
pub mod verify;

pub use besov::{besov_block_norms, besov_norm, besov_norm_vec, top_block_share, BesovSpec};
pub use partition::DyadicPartition;

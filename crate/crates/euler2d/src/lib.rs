//! Pseudo-spectral tools for 2-D incompressible flow with variable density on
//! the periodic square `[0, 2π)²`.
//!
//! The crate has three layers:
//! * a spectral core — grid, paired physical/spectral fields, exact
//!   derivative/projection operators and 2/3-rule products ([`grid`],
//!   [`field`], [`ops`]);
//! * a dyadic-analysis toolkit — smooth dyadic frequency decomposition, Besov
//!   norms with logarithmic weights, Bony product splitting, and ensemble
//!   verifiers for the classical inequalities ([`lp`], [`paraproduct`]);
//! * the flow solver and its instrumentation — RK4 pseudo-spectral integration
//!   of variable-density incompressible Euler flow, derived geometric fields
//!   (density-gradient direction field, momentum curl), growth monitors,
//!   a transport-equation harness, and run/report plumbing ([`solver`],
//!   [`diagnostics`], [`transport`], [`scenario`], [`checkpoint`]).

pub mod checkpoint;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod lp;
pub mod ops;
pub(crate) mod par;
pub mod paraproduct;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod suites;
pub mod transport;

pub use error::{Error, Result};

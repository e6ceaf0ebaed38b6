//! Attractor reconstruction and analysis for nonlinear time series.
//!
//! The crate covers delay embedding, correlation and generalized dimensions,
//! Lyapunov exponent estimation, reduced-model identification, neighborhood
//! forecasting, and Fourier-descriptor symmetry detection of closed contours.

pub mod embedding;
pub mod error;
pub mod identify;
pub mod invariants;
mod linalg;
pub mod lyapunov;
pub mod predict;
pub mod refsys;
pub mod scaling;
pub mod series;
pub mod symmetry;

pub use error::{Error, Result};

/// Seed used for every random choice unless the caller supplies one.
pub const DEFAULT_SEED: u64 = 1729;

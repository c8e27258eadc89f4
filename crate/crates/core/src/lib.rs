//! Random perturbed-integer spectra and the polynomial machinery needed to
//! build exponential-sum representations over them.

pub mod analysis;
pub mod approximator;
pub mod correction;
pub mod representer;
pub mod rng;
pub mod spectrum;
pub mod trigpoly;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

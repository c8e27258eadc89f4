//! Zero-mean polynomials with small coefficients that stay close to 1 off a
//! set of small measure.

mod analytic;
mod grid;
mod minimax;
mod verify;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trigpoly::TrigPoly;

pub use analytic::{dilation_family, normalized_jackson_kernel};
pub use grid::{periodic_point, periodic_values};
pub use verify::verify_correction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionStrategy {
    /// Averages of dilated Jackson kernels with disjoint spectra.
    Analytic,
    /// Linear programming over real coefficients on a grid.
    Minimax,
}

impl std::str::FromStr for CorrectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(CorrectionStrategy::Analytic),
            "minimax" => Ok(CorrectionStrategy::Minimax),
            other => Err(format!("unknown correction strategy {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRequest {
    pub eps: f64,
    pub delta: f64,
    pub strategy: CorrectionStrategy,
    /// Largest admissible degree.
    pub degree_budget: u64,
    /// Verification grid has `oversample * (2 deg + 1)` points.
    pub oversample: usize,
    /// Construction targets `eps (1 - margin)` and `delta (1 - margin)`.
    pub margin: f64,
}

impl CorrectionRequest {
    pub fn new(eps: f64, delta: f64, strategy: CorrectionStrategy, degree_budget: u64) -> Self {
        CorrectionRequest {
            eps,
            delta,
            strategy,
            degree_budget,
            oversample: 8,
            margin: 0.05,
        }
    }

    fn validate(&self) -> Result<(), CorrectionError> {
        let ok = self.eps.is_finite()
            && self.eps > 0.0
            && self.delta > 0.0
            && self.delta < 1.0
            && self.oversample >= 1
            && (0.0..0.5).contains(&self.margin);
        if ok {
            Ok(())
        } else {
            Err(CorrectionError::InvalidParameter(format!(
                "need eps > 0, 0 < delta < 1, oversample >= 1, 0 <= margin < 0.5; got {self:?}"
            )))
        }
    }
}

/// Grid measurements backing a correction polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub eps: f64,
    pub delta: f64,
    pub degree: u64,
    pub terms: usize,
    /// `|P^(0)|`; zero when the constant term is absent.
    pub mean_modulus: f64,
    pub coeff_linf: f64,
    pub bad_measure: f64,
    /// Grid spacing times the number of crossings of `|P - 1| = delta`.
    pub bad_measure_uncertainty: f64,
    pub majorant_sup: f64,
    pub majorant_grid_points: usize,
    pub c_achieved: f64,
    pub grid_points: usize,
    pub oversample: usize,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionPoly {
    pub poly: TrigPoly,
    pub certificate: Certificate,
    pub strategy: CorrectionStrategy,
    /// Strategy-specific description of how the polynomial was assembled.
    pub construction: String,
}

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "{strategy:?}: no certified polynomial within degree {budget} (lower bound on the degree: {required_degree:?})"
    )]
    BudgetExceeded {
        strategy: CorrectionStrategy,
        budget: u64,
        required_degree: Option<u64>,
        best: Option<Box<Certificate>>,
    },
    #[error("linear programming failure: {0}")]
    Solver(String),
}

impl CorrectionError {
    pub fn best(&self) -> Option<&Certificate> {
        match self {
            CorrectionError::BudgetExceeded { best, .. } => best.as_deref(),
            _ => None,
        }
    }
}

/// Lower bound on `sum_{j != 0} |P^(j)|^2` for a zero-mean `P` that stays
/// within `delta` of 1 outside a set of measure at most `eps`.
///
/// On the good set `G`, `Re P >= 1 - delta`; zero mean forces
/// `int_E Re P <= -|G| (1 - delta)` and Cauchy-Schwarz on `E` then bounds the
/// energy.
pub fn energy_lower_bound(eps: f64, delta: f64) -> f64 {
    if eps >= TAU {
        return 0.0;
    }
    let good = TAU - eps;
    let floor = 1.0 - delta;
    (good * good * floor * floor / eps + good * floor * floor) / TAU
}

/// Smallest degree compatible with the energy bound when every coefficient
/// has modulus below `delta`: `2 n delta^2` must exceed the bound.
pub fn min_degree_for(eps: f64, delta: f64) -> u64 {
    let energy = energy_lower_bound(eps, delta);
    if energy == 0.0 {
        return 0;
    }
    (energy / (2.0 * delta * delta)).ceil() as u64
}

pub fn build_correction(req: &CorrectionRequest) -> Result<CorrectionPoly, CorrectionError> {
    req.validate()?;
    if req.eps >= TAU {
        let poly = TrigPoly::zero();
        let certificate = verify_correction(&poly, req.eps, req.delta, req.oversample);
        return Ok(CorrectionPoly {
            poly,
            certificate,
            strategy: req.strategy,
            construction: "zero polynomial".into(),
        });
    }
    match req.strategy {
        CorrectionStrategy::Analytic => analytic::build(req),
        CorrectionStrategy::Minimax => minimax::build(req),
    }
}

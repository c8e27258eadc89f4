use serde::{Deserialize, Serialize};

use super::{block_indices, HalfWidthLaw, ShiftProfile, SpectrumError};
use crate::rng::{stream, symmetric_uniform, Domain};

/// Monte Carlo estimate of the chance that a fresh block satisfies the
/// condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockProbabilityRequest {
    pub k: i64,
    /// Block position; only matters when the half-width varies with `n`.
    pub l: i64,
    pub profile: ShiftProfile,
    pub law: HalfWidthLaw,
    pub tolerance: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockProbabilityReport {
    pub request: BlockProbabilityRequest,
    pub successes: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub analytic: f64,
}

const Z95: f64 = 1.959963984540054;

fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

/// Product over the block of `|(sigma - tol, sigma + tol) ∩ (-d, d)| / 2d`.
pub fn analytic_block_probability(req: &BlockProbabilityRequest) -> f64 {
    block_indices(req.k, req.l)
        .map(|(_, q, n)| {
            let d = req.law.half_width(n);
            let sigma = req.profile.shift(q);
            let lo = (sigma - req.tolerance).max(-d);
            let hi = (sigma + req.tolerance).min(d);
            ((hi - lo).max(0.0)) / (2.0 * d)
        })
        .product()
}

pub fn estimate_block_probability(req: &BlockProbabilityRequest) -> Result<BlockProbabilityReport, SpectrumError> {
    req.law.validate()?;
    req.profile.validate()?;
    if req.k < 2 || req.l < 2 * req.k || req.trials == 0 || !(req.tolerance > 0.0) {
        return Err(SpectrumError::InvalidParameter(format!(
            "need k >= 2, l >= 2k, trials > 0, tolerance > 0; got {req:?}"
        )));
    }
    let targets: Vec<(f64, f64)> = block_indices(req.k, req.l)
        .map(|(_, q, n)| (req.profile.shift(q), req.law.half_width(n)))
        .collect();
    let mut successes = 0u64;
    for trial in 0..req.trials {
        let mut rng = stream(req.seed, Domain::BlockTrial, trial);
        let ok = targets
            .iter()
            .all(|&(sigma, d)| (symmetric_uniform(&mut rng, d) - sigma).abs() < req.tolerance);
        if ok {
            successes += 1;
        }
    }
    let n = req.trials as f64;
    let estimate = successes as f64 / n;
    let std_error = (estimate * (1.0 - estimate) / n).sqrt();
    let (wilson_low, wilson_high) = wilson_interval(successes, req.trials);
    Ok(BlockProbabilityReport {
        request: req.clone(),
        successes,
        estimate,
        std_error,
        wilson_low,
        wilson_high,
        analytic: analytic_block_probability(req),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(profile: ShiftProfile, trials: u64) -> BlockProbabilityRequest {
        BlockProbabilityRequest {
            k: 2,
            l: 1000,
            profile,
            law: HalfWidthLaw::default(),
            tolerance: 0.25,
            trials,
            seed: 1,
        }
    }

    #[test]
    fn analytic_values_for_k2() {
        assert_eq!(analytic_block_probability(&request(ShiftProfile::Default, 1)), 1.0 / 64.0);
        assert_eq!(analytic_block_probability(&request(ShiftProfile::Paper, 1)), 0.0);
    }

    #[test]
    fn small_estimate_is_consistent() {
        let r = estimate_block_probability(&request(ShiftProfile::Default, 40_000)).unwrap();
        assert!((r.estimate - 1.0 / 64.0).abs() < 4.0 * r.std_error + 1e-9);
        assert!(r.wilson_low < 1.0 / 64.0 && 1.0 / 64.0 < r.wilson_high);
        let again = estimate_block_probability(&request(ShiftProfile::Default, 40_000)).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn wide_profile_never_succeeds() {
        let r = estimate_block_probability(&request(ShiftProfile::Paper, 20_000)).unwrap();
        assert_eq!(r.successes, 0);
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn wilson_handles_extremes() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100);
        assert!(lo > 0.95 && hi == 1.0);
    }
}

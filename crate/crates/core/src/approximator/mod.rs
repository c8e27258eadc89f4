//! Least-squares fits in measure by the shifted system `exp(i (q + sigma(q)) x)`.

mod grid;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{GridFunction, GridMeasure};

use crate::spectrum::ShiftProfile;
use crate::trigpoly::phase::phase;
use crate::trigpoly::{Frequency, Term, TrigPoly, TrigPolyError};

/// Rounds of reweighting after the plain least-squares solve.
pub const REWEIGHT_ROUNDS: usize = 5;
/// Ridge weight per grid point.
pub const RIDGE_PER_POINT: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids differ")]
    GridMismatch,
    #[error("target has a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("invalid fit parameter: {0}")]
    InvalidParameter(String),
    #[error("measure budget {budget} unmet up to degree {max_degree}; best bad measure {}", best.report.bad_measure)]
    BudgetUnmet { budget: f64, max_degree: u64, best: Box<Fit> },
    #[error("least-squares system is singular at degree {0}")]
    Singular(u64),
    #[error(transparent)]
    Poly(#[from] TrigPolyError),
    #[error("i/o: {0}")]
    Io(String),
}

impl FitError {
    fn csv(e: csv::Error) -> Self {
        FitError::Io(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRequest {
    /// Pointwise threshold `eta`.
    pub threshold: f64,
    /// Allowed measure `mu` of the set where the error exceeds `eta`.
    pub measure_budget: f64,
    pub profile: ShiftProfile,
    pub max_degree: u64,
    /// Keep climbing the degree ladder after the budget is met and return the
    /// fit with the smallest bad measure, rather than the first that succeeds.
    #[serde(default)]
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub degree_used: u64,
    pub terms: usize,
    pub bad_measure: f64,
    pub bad_measure_uncertainty: f64,
    /// Largest error outside the bad set.
    pub good_sup: f64,
    /// Root of `h * sum |F - target|^2`.
    pub residual_l2: f64,
    pub coeff_norm1: f64,
    pub ridge: f64,
    pub reweight_round: usize,
    pub threshold: f64,
    pub measure_budget: f64,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub poly: TrigPoly,
    pub report: FitReport,
    /// Reports of the accepted iterates of the degree ladder.
    pub trace: Vec<FitReport>,
}

/// `target - S` sampled on the target's grid.
pub fn residual(target: &GridFunction, s: &TrigPoly) -> GridFunction {
    target.map(|x, v| v - s.evaluate(x))
}

/// Recomputes every report field from scratch.
pub fn assess(target: &GridFunction, poly: &TrigPoly, threshold: f64, measure_budget: f64) -> FitReport {
    let err = residual(target, poly);
    let bad = err.exceedance(threshold);
    let good_sup = err
        .samples()
        .iter()
        .map(|v| v.norm())
        .filter(|&e| e <= threshold)
        .fold(0.0, f64::max);
    let l2 = (err.step() * err.samples().iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
    let degree_used = poly
        .terms()
        .iter()
        .map(|t| t.freq.integer_part().unsigned_abs())
        .max()
        .unwrap_or(0);
    FitReport {
        degree_used,
        terms: poly.len(),
        bad_measure: bad.measure,
        bad_measure_uncertainty: bad.uncertainty,
        good_sup,
        residual_l2: l2,
        coeff_norm1: poly.coeff_norms().l1,
        ridge: RIDGE_PER_POINT * target.len() as f64,
        reweight_round: 0,
        threshold,
        measure_budget,
        success: bad.measure < measure_budget,
    }
}

/// `0, 1, 2, 4, ...` capped by and ending at `max_degree`.
pub fn degree_ladder(max_degree: u64) -> Vec<u64> {
    let mut ladder = vec![0];
    let mut d = 1;
    while d < max_degree {
        ladder.push(d);
        d *= 2;
    }
    if max_degree > 0 {
        ladder.push(max_degree);
    }
    ladder
}

/// System frequencies `q + sigma(q)`, `|q| <= degree`, in order of increasing
/// `|q|`; a frequency hit twice keeps the smaller `|q|`.
fn basis(profile: &ShiftProfile, degree: u64) -> Result<Vec<(i64, Frequency)>, TrigPolyError> {
    let d = degree as i64;
    let mut out: Vec<(i64, Frequency)> = Vec::new();
    for m in 0..=d {
        for q in if m == 0 { vec![0] } else { vec![-m, m] } {
            let f = profile.shifted_frequency(q)?;
            if !out.iter().any(|&(_, g)| g == f) {
                out.push((q, f));
            }
        }
    }
    Ok(out)
}

fn design(target: &GridFunction, freqs: &[(i64, Frequency)]) -> DMatrix<Complex64> {
    DMatrix::from_fn(target.len(), freqs.len(), |j, c| {
        Complex64::from_polar(1.0, phase(freqs[c].1, target.x(j)))
    })
}

/// Weighted ridge least squares through a QR factorization of
/// `[sqrt(W) A; sqrt(ridge) I]`.
fn solve_weighted(
    a: &DMatrix<Complex64>,
    b: &[Complex64],
    weights: &[f64],
    ridge: f64,
) -> Option<DVector<Complex64>> {
    let (rows, cols) = a.shape();
    let root_ridge = Complex64::new(ridge.sqrt(), 0.0);
    let m = DMatrix::from_fn(rows + cols, cols, |r, c| {
        if r < rows {
            a[(r, c)] * weights[r].sqrt()
        } else if r - rows == c {
            root_ridge
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rhs = DVector::from_fn(rows + cols, |r, _| {
        if r < rows {
            b[r] * weights[r].sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let qr = m.qr();
    let qtb = qr.q().adjoint() * rhs;
    qr.r().solve_upper_triangular(&qtb)
}

fn to_poly(freqs: &[(i64, Frequency)], coeffs: &DVector<Complex64>) -> Result<TrigPoly, TrigPolyError> {
    TrigPoly::from_terms(
        freqs
            .iter()
            .zip(coeffs.iter())
            .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
            .map(|(&(_, freq), &coeff)| Term { freq, coeff }),
    )
}

/// Weight left on trimmed samples.
const TRIMMED_WEIGHT: f64 = 1e-6;

/// Trimmed, reweighted least squares: the worst samples above `eta`, up to a
/// total measure just under the budget, are dropped as the exceptional set;
/// samples already within `eta/2` lose weight so the solve concentrates on
/// the marginal ones.
fn reweight(errors: &[f64], threshold: f64, trim_count: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..errors.len()).filter(|&j| errors[j] > threshold).collect();
    order.sort_by(|&a, &b| errors[b].total_cmp(&errors[a]).then(a.cmp(&b)));
    let mut weights: Vec<f64> = errors
        .iter()
        .map(|&e| if e <= 0.5 * threshold { 0.25 } else { 1.0 })
        .collect();
    for &j in order.iter().take(trim_count) {
        weights[j] = TRIMMED_WEIGHT;
    }
    weights
}

/// Best iterate at a fixed degree: plain least squares, then reweighted rounds.
fn fit_at_degree(target: &GridFunction, req: &FitRequest, degree: u64) -> Result<(TrigPoly, FitReport), FitError> {
    let freqs = basis(&req.profile, degree)?;
    let a = design(target, &freqs);
    let ridge = RIDGE_PER_POINT * target.len() as f64;
    let mut weights = vec![1.0; target.len()];
    let mut best: Option<(TrigPoly, FitReport)> = None;
    let trim_count = (0.9 * req.measure_budget / target.step()).floor() as usize;
    for round in 0..=REWEIGHT_ROUNDS {
        let coeffs = solve_weighted(&a, target.samples(), &weights, ridge).ok_or(FitError::Singular(degree))?;
        let poly = to_poly(&freqs, &coeffs)?;
        let mut report = assess(target, &poly, req.threshold, req.measure_budget);
        report.reweight_round = round;
        let better = best.as_ref().is_none_or(|(_, b)| report.bad_measure < b.bad_measure);
        let done = report.success;
        let errors: Vec<f64> = residual(target, &poly).samples().iter().map(|v| v.norm()).collect();
        if better {
            best = Some((poly, report));
        }
        if done {
            break;
        }
        weights = reweight(&errors, req.threshold, trim_count);
    }
    Ok(best.expect("at least one round"))
}

/// Escalates the degree along [`degree_ladder`] until the grid measure of
/// `{|F - target| > eta}` drops below the budget.
pub fn fit_in_measure(target: &GridFunction, req: &FitRequest) -> Result<Fit, FitError> {
    if !(req.threshold > 0.0 && req.threshold.is_finite()) {
        return Err(FitError::InvalidParameter(format!("threshold {}", req.threshold)));
    }
    if !(req.measure_budget > 0.0) {
        return Err(FitError::InvalidParameter(format!("measure budget {}", req.measure_budget)));
    }
    req.profile
        .validate()
        .map_err(|e| FitError::InvalidParameter(e.to_string()))?;
    if let Some(j) = target.samples().iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(FitError::NonFinite(j));
    }
    let empty = TrigPoly::zero();
    let start = assess(target, &empty, req.threshold, req.measure_budget);
    if target.samples().iter().all(|v| v.norm() == 0.0) || start.bad_measure == 0.0 {
        return Ok(Fit {
            poly: empty,
            trace: vec![start.clone()],
            report: start,
        });
    }
    let mut best = (empty, start);
    let mut trace = Vec::new();
    for degree in degree_ladder(req.max_degree) {
        let (poly, report) = fit_at_degree(target, req, degree)?;
        if report.bad_measure <= best.1.bad_measure {
            trace.push(report.clone());
            let success = report.success;
            best = (poly, report);
            if success && !req.refine {
                return Ok(Fit {
                    poly: best.0,
                    report: best.1,
                    trace,
                });
            }
        }
    }
    if best.1.success {
        return Ok(Fit {
            poly: best.0,
            report: best.1,
            trace,
        });
    }
    Err(FitError::BudgetUnmet {
        budget: req.measure_budget,
        max_degree: req.max_degree,
        best: Box::new(Fit {
            poly: best.0,
            report: best.1,
            trace,
        }),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn request(threshold: f64, budget: f64, max_degree: u64) -> FitRequest {
        FitRequest {
            threshold,
            measure_budget: budget,
            profile: ShiftProfile::Default,
            max_degree,
            refine: false,
        }
    }

    #[test]
    fn ladder_shape() {
        assert_eq!(degree_ladder(0), vec![0]);
        assert_eq!(degree_ladder(48), vec![0, 1, 2, 4, 8, 16, 32, 48]);
        assert_eq!(degree_ladder(8), vec![0, 1, 2, 4, 8]);
    }

    #[test]
    fn recovers_a_member_of_the_system() {
        let profile = ShiftProfile::Default;
        let f = profile.shifted_frequency(3).unwrap();
        let step = GridFunction::dyadic_step_for(8);
        let target = GridFunction::sample(1.0, step, |x| Complex64::from_polar(1.0, phase(f, x))).unwrap();
        let fit = fit_in_measure(&target, &request(1e-6, 1e-3, 8)).unwrap();
        assert_eq!(fit.report.bad_measure, 0.0);
        assert!((fit.poly.coefficient(f) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        for t in fit.poly.terms() {
            if t.freq != f {
                assert!(t.coeff.norm() <= 1e-10, "{t:?}");
            }
        }
        for t in fit.poly.terms() {
            assert_eq!(Some(t.freq), profile.index_of(t.freq).map(|q| profile.shifted_frequency(q).unwrap()));
        }
    }

    #[test]
    fn zero_target_gives_empty_fit() {
        let target = GridFunction::sample(1.0, 1.0 / 64.0, |_| Complex64::new(0.0, 0.0)).unwrap();
        let fit = fit_in_measure(&target, &request(0.1, 0.1, 8)).unwrap();
        assert!(fit.poly.is_empty());
        assert_eq!(fit.report.bad_measure, 0.0);
    }

    #[test]
    fn step_function_within_budget() {
        let step = GridFunction::dyadic_step_for(48);
        let target = GridFunction::sample(1.0, step, |x| {
            Complex64::new(if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let fit = fit_in_measure(&target, &request(0.25, 0.3, 48)).unwrap();
        assert!(fit.report.bad_measure < 0.3);
        // Independent recount on a grid eight times finer.
        let fine = GridFunction::sample(1.0, step / 8.0, |x| {
            let v = if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
            Complex64::new(v, 0.0) - fit.poly.evaluate(x)
        })
        .unwrap();
        let m = fine.exceedance(0.25);
        assert!(m.measure < 0.3 + m.uncertainty, "{m:?}");
        let accepted: Vec<f64> = fit.trace.iter().map(|r| r.bad_measure).collect();
        assert!(accepted.windows(2).all(|w| w[1] <= w[0]), "{accepted:?}");
    }

    #[test]
    fn budget_unmet_carries_best() {
        let target = GridFunction::sample(1.0, 1.0 / 32.0, |x| Complex64::new(if x > 0.0 { 1.0 } else { -1.0 }, 0.0)).unwrap();
        match fit_in_measure(&target, &request(1e-3, 1e-3, 2)) {
            Err(FitError::BudgetUnmet { best, .. }) => assert!(!best.report.success),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let target = GridFunction::sample(1.0, 0.5, |x| Complex64::new(if x == 0.0 { f64::NAN } else { 0.0 }, 0.0)).unwrap();
        assert!(matches!(fit_in_measure(&target, &request(0.1, 0.1, 2)), Err(FitError::NonFinite(2))));
    }

    #[test]
    fn residual_identities() {
        let p = TrigPoly::from_terms([Term {
            freq: Frequency::new(2, 0.25).unwrap(),
            coeff: Complex64::new(0.5, -1.0),
        }])
        .unwrap();
        let target = GridFunction::sample(1.0, 1.0 / 16.0, |x| p.evaluate(x)).unwrap();
        assert_eq!(residual(&target, &TrigPoly::zero()), target);
        assert!(residual(&target, &p).samples().iter().all(|v| v.norm() == 0.0));
        let shifted = GridFunction::sample(1.0, 1.0 / 16.0, |x| Complex64::new(x, 0.0)).unwrap();
        let r = residual(&shifted, &p);
        for j in 0..r.len() {
            assert_eq!(r.samples()[j], Complex64::new(shifted.x(j), 0.0) - p.evaluate(shifted.x(j)));
        }
        assert!((r.x(r.len() - 1) - PI).abs() < 1e-15);
    }
}

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::grid::{periodic_point, periodic_values};
use super::Certificate;
use crate::trigpoly::{Frequency, TrigPoly};

/// Budget, in term evaluations, for the windowed-majorant scan.
const MAJORANT_WORK: usize = 30_000_000;
const MIN_GRID: usize = 64;

/// Measures a candidate on the periodic grid with `oversample (2 deg + 1)`
/// points. Panics if the spectrum is not integer.
pub fn verify_correction(poly: &TrigPoly, eps: f64, delta: f64, oversample: usize) -> Certificate {
    let degree = poly.degree().round() as u64;
    let n = (oversample.max(1) * (2 * degree as usize + 1)).max(MIN_GRID);
    let values = periodic_values(poly, n);
    let h = TAU / n as f64;
    let one = Complex64::new(1.0, 0.0);
    let bad: Vec<bool> = values.iter().map(|v| (v - one).norm() > delta).collect();
    let bad_count = bad.iter().filter(|&&b| b).count();
    let crossings = (0..n).filter(|&j| bad[j] != bad[(j + 1) % n]).count();

    let stride = (n * poly.len().max(1)).div_ceil(MAJORANT_WORK).max(1);
    let points: Vec<f64> = (0..n).step_by(stride).map(|j| periodic_point(j, n)).collect();
    let majorant_grid_points = points.len();
    let majorant_sup = poly.majorant_many(&points).into_iter().fold(0.0f64, f64::max);

    let norms = poly.coeff_norms();
    let mean_modulus = poly.coefficient(Frequency::ZERO).norm();
    let bad_measure = h * bad_count as f64;
    let bad_measure_uncertainty = h * crossings as f64;
    let certified = mean_modulus == 0.0
        && norms.linf < delta
        && (bad_measure + bad_measure_uncertainty < eps || (bad_count == n && TAU <= eps));
    Certificate {
        eps,
        delta,
        degree,
        terms: poly.len(),
        mean_modulus,
        coeff_linf: norms.linf,
        bad_measure,
        bad_measure_uncertainty,
        majorant_sup,
        majorant_grid_points,
        c_achieved: majorant_sup * eps,
        grid_points: n,
        oversample,
        certified,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trigpoly::Term;

    #[test]
    fn constant_polynomial_is_rejected() {
        let one = TrigPoly::from_terms(vec![Term { freq: Frequency::ZERO, coeff: Complex64::new(1.0, 0.0) }]).unwrap();
        let c = verify_correction(&one, 1.0, 0.5, 8);
        assert_eq!(c.bad_measure, 0.0);
        assert_eq!(c.mean_modulus, 1.0);
        assert!(!c.certified);
    }

    #[test]
    fn cosine_exceedance_set() {
        // P = 0.4 cos x: |P - 1| > 0.9 exactly where cos x < 0.25.
        let p = TrigPoly::from_integer_coeffs(-1, &[Complex64::new(0.2, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.0)]).unwrap();
        let c = verify_correction(&p, 4.0, 0.9, 4000);
        let exact = 2.0 * (std::f64::consts::PI - 0.25f64.acos());
        assert!((c.bad_measure - exact).abs() <= c.bad_measure_uncertainty);
        assert!(c.certified);
        assert!((c.majorant_sup - 0.4).abs() < 1e-9);
        assert_eq!(c.c_achieved, c.majorant_sup * 4.0);
    }
}

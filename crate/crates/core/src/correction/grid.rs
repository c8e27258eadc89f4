use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::trigpoly::TrigPoly;

/// Values of an integer-spectrum polynomial at `x_j = -pi + 2 pi j / n`,
/// `j = 0..n`, by one inverse FFT. Requires `n >= 2 deg + 1`.
pub fn periodic_values(poly: &TrigPoly, n: usize) -> Vec<Complex64> {
    assert!(poly.is_integer_spectrum(), "periodic grid needs integer frequencies");
    assert!(n as f64 >= 2.0 * poly.degree() + 1.0, "grid too coarse for the degree");
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for t in poly.terms() {
        let k = t.freq.integer_part();
        // exp(i k (-pi)) = (-1)^k
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        bins[k.rem_euclid(n as i64) as usize] += t.coeff * sign;
    }
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut bins);
    bins
}

pub fn periodic_point(j: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / n as f64
}

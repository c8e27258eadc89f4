//! Argument reduction for `exp(i * lambda * x)` when the integer part of
//! `lambda` is large.

use num_complex::Complex64;

use super::Frequency;

// 2*pi split into three doubles.
const TWO_PI_HI: f64 = 6.283185307179586;
const TWO_PI_MID: f64 = 2.4492935982947064e-16;
const TWO_PI_LO: f64 = -5.989539619436679e-33;

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `n * x` reduced modulo `2*pi`, accurate to a few ulps of `pi` for any
/// `|n| < 2^52`.
#[inline]
pub fn reduce_integer_phase(n: i64, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (ph, pl) = two_prod(n as f64, x);
    if ph.abs() < 1.0 {
        return ph + pl;
    }
    let k = (ph / TWO_PI_HI).round();
    let (kh, kl) = two_prod(k, TWO_PI_HI);
    let (mh, ml) = two_prod(k, TWO_PI_MID);
    ((ph - kh) + (pl - kl)) - mh - ml - k * TWO_PI_LO
}

/// `lambda * x` modulo `2*pi` (offset part added without reduction).
#[inline]
pub fn phase(freq: Frequency, x: f64) -> f64 {
    reduce_integer_phase(freq.integer_part(), x) + freq.offset() * x
}

#[inline]
pub fn unit_phasor(freq: Frequency, x: f64) -> Complex64 {
    let (s, c) = phase(freq, x).sin_cos();
    Complex64::new(c, s)
}

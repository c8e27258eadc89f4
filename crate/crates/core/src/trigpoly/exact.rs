//! Exact accumulation of sums of doubles and of pairwise products, rounded
//! once at the end.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Splits a finite double into `mantissa * 2^exponent` with an integer
/// mantissa.
fn decompose(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if exp_bits == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i64 << 52)), exp_bits - 1075)
    }
}

/// Dyadic rational `value * 2^exponent` with an arbitrary precision numerator.
#[derive(Clone, Debug)]
pub struct ExactSum {
    value: BigInt,
    exponent: i32,
}

impl Default for ExactSum {
    fn default() -> Self {
        ExactSum {
            value: BigInt::zero(),
            exponent: 0,
        }
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_scaled(&mut self, mantissa: BigInt, exponent: i32) {
        if mantissa.is_zero() {
            return;
        }
        if self.value.is_zero() {
            self.value = mantissa;
            self.exponent = exponent;
            return;
        }
        if exponent >= self.exponent {
            self.value += mantissa << (exponent - self.exponent) as usize;
        } else {
            self.value = (&self.value << (self.exponent - exponent) as usize) + mantissa;
            self.exponent = exponent;
        }
    }

    pub fn add(&mut self, x: f64) {
        assert!(x.is_finite(), "exact sum of a non-finite value");
        let (m, e) = decompose(x);
        self.add_scaled(BigInt::from(m), e);
    }

    pub fn add_product(&mut self, a: f64, b: f64) {
        assert!(a.is_finite() && b.is_finite(), "exact sum of a non-finite value");
        let (ma, ea) = decompose(a);
        let (mb, eb) = decompose(b);
        self.add_scaled(BigInt::from(ma) * BigInt::from(mb), ea + eb);
    }

    /// Exact product of two accumulated sums.
    pub fn times(&self, other: &ExactSum) -> ExactSum {
        ExactSum {
            value: &self.value * &other.value,
            exponent: self.exponent + other.exponent,
        }
    }

    /// Correctly rounded (ties to even) value, assuming a normal result.
    pub fn to_f64(&self) -> f64 {
        if self.value.is_zero() {
            return 0.0;
        }
        let negative = self.value.is_negative();
        let magnitude = self.value.abs();
        let bits = magnitude.bits() as i64;
        let (mantissa, shift) = if bits <= 53 {
            (magnitude.to_u64().expect("fits in 53 bits"), 0i64)
        } else {
            let shift = bits - 53;
            let kept: BigInt = &magnitude >> shift as usize;
            let remainder: BigInt = &magnitude - (&kept << shift as usize);
            let half: BigInt = BigInt::one() << (shift - 1) as usize;
            let mut m = kept.to_u64().expect("fits in 53 bits");
            if remainder > half || (remainder == half && m & 1 == 1) {
                m += 1;
            }
            (m, shift)
        };
        let result = scale_by_power_of_two(mantissa as f64, shift + self.exponent as i64);
        if negative {
            -result
        } else {
            result
        }
    }
}

fn scale_by_power_of_two(mut x: f64, mut exponent: i64) -> f64 {
    while exponent > 1000 {
        x *= 2f64.powi(1000);
        exponent -= 1000;
    }
    while exponent < -1000 {
        x *= 2f64.powi(-1000);
        exponent += 1000;
    }
    x * 2f64.powi(exponent as i32)
}

/// Correctly rounded sum of the values.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactSum::new();
    for v in values {
        acc.add(v);
    }
    acc.to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_is_exact() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1, 0.2, -0.3]), 2.7755575615628914e-17);
    }

    #[test]
    fn single_values_round_trip() {
        for &x in &[0.1, -3.75, 1e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(exact_sum([x]), x);
        }
    }

    #[test]
    fn ties_round_to_even() {
        let one = 1.0f64;
        let ulp_half = 2f64.powi(-53);
        assert_eq!(exact_sum([one, ulp_half]), 1.0);
        let next = 1.0 + 2f64.powi(-52);
        assert_eq!(exact_sum([next, ulp_half]), 1.0 + 2.0 * 2f64.powi(-52));
    }

    #[test]
    fn product_of_sums_equals_sum_of_products() {
        let a = [0.3, 1.7, 2.0f64.sqrt(), 1e-5];
        let b = [0.11, 5.5, std::f64::consts::PI];
        let mut sa = ExactSum::new();
        a.iter().for_each(|&x| sa.add(x));
        let mut sb = ExactSum::new();
        b.iter().for_each(|&x| sb.add(x));
        let mut pairwise = ExactSum::new();
        for &x in &a {
            for &y in &b {
                pairwise.add_product(x, y);
            }
        }
        assert_eq!(sa.times(&sb).to_f64(), pairwise.to_f64());
    }
}

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::trigpoly::Frequency;

/// Depth of the tail used by [`smoothing_obstruction`].
pub const TAIL_START: u64 = 1000;

/// `(1 - e^{-2 pi i lambda})^k`, the symbol of `f -> f(x) - f(x - 2 pi)`
/// applied `k` times. Only the offset matters, the integer part contributes 1.
pub fn delta_multiplier(freq: Frequency, k: u32) -> Complex64 {
    let theta = -2.0 * PI * freq.offset();
    let base = Complex64::new(1.0 - theta.cos(), -theta.sin());
    base.powu(k)
}

/// `|delta_multiplier|` in closed form, `(2 |sin(pi offset)|)^k`.
pub fn delta_multiplier_modulus(offset: f64, k: u32) -> f64 {
    (2.0 * (PI * offset).sin().abs()).powi(k as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionRow {
    pub k: u32,
    /// Whether `sum n^beta (2 sin(pi c n^-alpha))^k` converges, i.e.
    /// `alpha k > beta + 1`.
    pub converges: bool,
    /// Upper bound for the sum over `n > TAIL_START`; absent when divergent.
    pub tail_bound: Option<f64>,
}

/// Summability of `Delta^k` applied to a series with `|c_n| <= n^beta` on a
/// spectrum `n + O(n^-alpha)` with offsets at most `c n^-alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub tail_start: u64,
    /// Smallest `k` with `alpha k > beta + 1`.
    pub minimal_k: u32,
    pub rows: Vec<ObstructionRow>,
    pub summary: String,
}

/// Smallest positive integer `k` with `alpha k > beta + 1`.
pub fn minimal_smoothing_order(alpha: f64, beta: f64) -> Result<u32, AnalysisError> {
    if !(alpha > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("alpha {alpha}, beta {beta}")));
    }
    let ratio = (beta + 1.0) / alpha;
    let mut k = if ratio < 0.0 { 1.0 } else { ratio.floor() + 1.0 };
    // floor can land one short when (beta + 1) / alpha rounds up to an integer.
    while alpha * (k - 1.0) > beta + 1.0 && k > 1.0 {
        k -= 1.0;
    }
    while alpha * k <= beta + 1.0 {
        k += 1.0;
    }
    if k > u32::MAX as f64 {
        return Err(AnalysisError::InvalidParameter(format!("order {k} is out of range")));
    }
    Ok(k as u32)
}

/// `(2 pi c)^k N0^(beta - alpha k + 1) / (alpha k - beta - 1)`, from
/// `sin t <= t` and comparison with an integral.
pub fn tail_bound(alpha: f64, beta: f64, c: f64, k: u32, start: u64) -> Option<f64> {
    let exponent = alpha * k as f64 - beta - 1.0;
    if exponent <= 0.0 {
        return None;
    }
    Some((2.0 * PI * c).powi(k as i32) * (start as f64).powf(-exponent) / exponent)
}

/// `sum_{n = start+1}^{start+terms} n^beta (2 sin(pi c n^-alpha))^k`.
pub fn tail_sum(alpha: f64, beta: f64, c: f64, k: u32, start: u64, terms: u64) -> f64 {
    // Summed from the small end so the tail does not vanish into the head.
    (start + 1..=start + terms)
        .rev()
        .map(|n| {
            let n = n as f64;
            n.powf(beta) * delta_multiplier_modulus(c * n.powf(-alpha), k)
        })
        .sum()
}

pub fn smoothing_obstruction(alpha: f64, beta: f64, c: f64, k_max: u32) -> Result<ObstructionReport, AnalysisError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("c {c}")));
    }
    let minimal_k = minimal_smoothing_order(alpha, beta)?;
    let rows: Vec<ObstructionRow> = (1..=k_max.max(minimal_k))
        .map(|k| ObstructionRow {
            k,
            converges: alpha * k as f64 > beta + 1.0,
            tail_bound: tail_bound(alpha, beta, c, k, TAIL_START),
        })
        .collect();
    let summary = format!(
        "for k >= {minimal_k} the k-fold difference f(x) - f(x - 2 pi) of any series with |c_n| <= n^{beta} \
         on a spectrum n + O(n^-{alpha}) converges absolutely, so it is continuous; a function whose \
         k-th difference is discontinuous cannot be represented on such a spectrum"
    );
    Ok(ObstructionReport {
        alpha,
        beta,
        c,
        tail_start: TAIL_START,
        minimal_k,
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_frequencies_are_annihilated() {
        for k in 1..5 {
            assert_eq!(delta_multiplier(Frequency::integer(17), k), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn half_offset_gives_two() {
        let m = delta_multiplier(Frequency::new(3, 0.5).unwrap(), 1);
        assert!((m - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn modulus_matches_closed_form() {
        for n in [1.0f64, 10.0, 1000.0] {
            let offset = 0.3 * n.powf(-1.0);
            for k in 1..6 {
                let m = delta_multiplier(Frequency::new(n as i64, offset).unwrap(), k);
                assert!((m.norm() - (2.0 * (PI * offset).sin()).powi(k as i32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_orders() {
        assert_eq!(minimal_smoothing_order(1.0, 0.0).unwrap(), 2);
        assert_eq!(minimal_smoothing_order(0.5, 2.0).unwrap(), 7);
        assert_eq!(minimal_smoothing_order(2.0, 1.0).unwrap(), 2);
        assert_eq!(minimal_smoothing_order(3.0, -1.0).unwrap(), 1);
        assert!(minimal_smoothing_order(0.0, 1.0).is_err());
    }

    #[test]
    fn tail_bound_tracks_the_sum() {
        let bound = tail_bound(1.0, 0.0, 1.0, 2, TAIL_START).unwrap();
        let sum = tail_sum(1.0, 0.0, 1.0, 2, TAIL_START, 1_000_000);
        assert!(bound >= sum);
        assert!((bound - sum) / sum < 0.01, "{bound} {sum}");
        assert!(tail_bound(1.0, 0.0, 1.0, 1, TAIL_START).is_none());
    }

    #[test]
    fn report_lists_orders_up_to_the_minimum() {
        let r = smoothing_obstruction(0.5, 2.0, 1.0, 3).unwrap();
        assert_eq!(r.minimal_k, 7);
        assert_eq!(r.rows.len(), 7);
        assert!(r.rows.iter().all(|row| row.converges == (row.k >= 7)));
    }
}

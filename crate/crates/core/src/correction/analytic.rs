//! `P(x) = 1 - (1/L) sum_r K(a_r x)` with a normalised Jackson kernel `K`
//! and pairwise coprime dilations `a_r` above the kernel degree, so the
//! dilated spectra only meet at 0.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{verify_correction, CorrectionError, CorrectionPoly, CorrectionRequest, CorrectionStrategy};
use crate::trigpoly::{Frequency, Term, TrigPoly};

/// Coefficients `K^(t)`, `t = -(2m-2)..=2m-2`, of the squared Fejér kernel of
/// order `m` scaled to `K^(0) = 1`. Every other coefficient lies in `(0, 1)`.
pub fn normalized_jackson_kernel(m: usize) -> Vec<f64> {
    assert!(m >= 1);
    let m = m as i64;
    let weight = |j: i64| if j.abs() < m { (m - j.abs()) as i128 } else { 0 };
    let reach = 2 * (m - 1);
    let autocorrelation = |t: i64| -> i128 { (-(m - 1)..m).map(|j| weight(j) * weight(j + t)).sum() };
    let centre = autocorrelation(0) as f64;
    (-reach..=reach).map(|t| autocorrelation(t) as f64 / centre).collect()
}

/// Kernel value from the closed form `F_m(y)^2 / ||F_m||_2^2`.
fn kernel_value(m: usize, y: f64) -> f64 {
    let mf = m as f64;
    let s = (y / 2.0).sin();
    let fejer = if s.abs() < 1e-300 {
        mf
    } else {
        let r = (mf * y / 2.0).sin() / s;
        r * r / mf
    };
    let energy = (2.0 * mf * mf + 1.0) / (3.0 * mf);
    fejer * fejer / energy
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// The `count` smallest integers `>= start` chosen greedily to be pairwise
/// coprime.
pub fn dilation_family(count: usize, start: i64) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::with_capacity(count);
    let mut a = start.max(2);
    while out.len() < count {
        if out.iter().all(|&b| gcd(a, b) == 1) {
            out.push(a);
        }
        a += 1;
    }
    out
}

struct Layout {
    order: usize,
    dilations: Vec<i64>,
}

impl Layout {
    fn new(order: usize, blocks: usize) -> Self {
        let kernel_degree = 2 * (order as i64 - 1);
        Layout {
            order,
            dilations: dilation_family(blocks, kernel_degree + 1),
        }
    }

    fn degree(&self) -> u64 {
        let kernel_degree = 2 * (self.order as u64 - 1);
        *self.dilations.last().unwrap() as u64 * kernel_degree
    }

    fn polynomial(&self) -> TrigPoly {
        let kernel = normalized_jackson_kernel(self.order);
        let reach = 2 * (self.order as i64 - 1);
        let weight = 1.0 / self.dilations.len() as f64;
        let mut terms = Vec::with_capacity(self.dilations.len() * kernel.len());
        for &a in &self.dilations {
            for (i, &c) in kernel.iter().enumerate() {
                let t = i as i64 - reach;
                if t != 0 {
                    terms.push(Term {
                        freq: Frequency::integer(a * t),
                        coeff: Complex64::new(-weight * c, 0.0),
                    });
                }
            }
        }
        TrigPoly::from_terms(terms).expect("finite coefficients")
    }
}

/// Measure of `{L K > L delta}` summed over the `L` dilations, ignoring the
/// interaction between them.
fn predicted_bad_measure(order: usize, blocks: usize, delta: f64) -> f64 {
    let samples = 64 * order.max(16);
    let h = 2.0 * PI / samples as f64;
    let threshold = blocks as f64 * delta;
    let count = (0..samples)
        .filter(|&j| kernel_value(order, -PI + (j as f64 + 0.5) * h) > threshold)
        .count();
    blocks as f64 * h * count as f64
}

fn smallest_order(blocks: usize, delta: f64, target: f64, cap: usize) -> usize {
    let mut hi = 2usize;
    while predicted_bad_measure(hi, blocks, delta) > target {
        if hi >= cap {
            return cap;
        }
        hi = (hi * 2).min(cap);
    }
    let mut lo = (hi / 2).max(1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if predicted_bad_measure(mid, blocks, delta) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(2)
}

pub(super) fn build(req: &CorrectionRequest) -> Result<CorrectionPoly, CorrectionError> {
    let eps_target = req.eps * (1.0 - req.margin);
    let delta_target = req.delta * (1.0 - req.margin);
    let blocks = (1.0 / delta_target).ceil() as usize;
    // Order at which even the first dilation exceeds the budget.
    let order_cap = ((req.degree_budget as f64).sqrt() as usize / 2 + 2).max(2);
    let mut order = smallest_order(blocks, req.delta, 0.9 * eps_target, order_cap);
    let mut best = None;
    for _ in 0..40 {
        let layout = Layout::new(order, blocks);
        if layout.degree() > req.degree_budget {
            return Err(CorrectionError::BudgetExceeded {
                strategy: CorrectionStrategy::Analytic,
                budget: req.degree_budget,
                required_degree: Some(super::min_degree_for(req.eps, req.delta)),
                best,
            });
        }
        let poly = layout.polynomial();
        let certificate = verify_correction(&poly, req.eps, req.delta, req.oversample);
        let strict = certificate.bad_measure + certificate.bad_measure_uncertainty < eps_target
            && certificate.coeff_linf < delta_target;
        if certificate.certified && strict {
            return Ok(CorrectionPoly {
                poly,
                certificate,
                strategy: CorrectionStrategy::Analytic,
                construction: format!(
                    "jackson kernel order {order}, {blocks} dilations {:?}",
                    layout.dilations
                ),
            });
        }
        best = Some(Box::new(certificate));
        order = order + (order / 10).max(1);
    }
    Err(CorrectionError::BudgetExceeded {
        strategy: CorrectionStrategy::Analytic,
        budget: req.degree_budget,
        required_degree: Some(super::min_degree_for(req.eps, req.delta)),
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_coefficients() {
        let k = normalized_jackson_kernel(3);
        // Fejér weights (1/3, 2/3, 1, 2/3, 1/3) up to scale: (1,2,3,2,1).
        // Autocorrelation: (1, 4, 10, 16, 19, 16, 10, 4, 1) / 19.
        let expected: Vec<f64> = [1.0, 4.0, 10.0, 16.0, 19.0, 16.0, 10.0, 4.0, 1.0].iter().map(|v| v / 19.0).collect();
        assert_eq!(k, expected);
    }

    #[test]
    fn closed_form_matches_coefficients() {
        let m = 7;
        let k = normalized_jackson_kernel(m);
        let reach = 2 * (m as i64 - 1);
        for &y in &[0.0, 0.3, -1.1, 2.9] {
            let series: f64 = k.iter().enumerate().map(|(i, c)| c * ((i as i64 - reach) as f64 * y).cos()).sum();
            assert!((series - kernel_value(m, y)).abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn dilations_are_pairwise_coprime() {
        let d = dilation_family(6, 9);
        assert_eq!(d, vec![9, 10, 11, 13, 17, 19]);
    }

    #[test]
    fn spectra_of_dilations_do_not_collide() {
        let layout = Layout::new(5, 4);
        let poly = layout.polynomial();
        assert_eq!(poly.len(), 4 * 16);
        assert!(poly.coeff_norms().linf < 0.25);
        assert_eq!(poly.coefficient(Frequency::ZERO), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn moderate_target_is_certified() {
        let req = CorrectionRequest::new(2.0, 0.5, CorrectionStrategy::Analytic, 5_000);
        let p = build(&req).unwrap();
        assert!(p.certificate.certified);
        assert!(p.certificate.bad_measure < 2.0);
        assert!(p.certificate.coeff_linf < 0.5);
        let again = verify_correction(&p.poly, 2.0, 0.5, 16);
        assert!(again.certified);
    }

    #[test]
    fn tiny_budget_fails_explicitly() {
        let req = CorrectionRequest::new(0.5, 0.2, CorrectionStrategy::Analytic, 64);
        match build(&req) {
            Err(CorrectionError::BudgetExceeded { required_degree, .. }) => assert_eq!(required_degree, Some(93)),
            other => panic!("unexpected {other:?}"),
        }
    }
}

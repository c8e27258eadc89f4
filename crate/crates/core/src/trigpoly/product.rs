use num_complex::Complex64;

use super::{ExactSum, Frequency, Term, TrigPoly, TrigPolyError};

/// `H(x) = Q(l x) P(x)` for an integer-spectrum modulator `Q` and a step `l`
/// larger than twice the carrier degree, so the blocks `j l + spec P` are
/// disjoint and stay in the order of `j`.
#[derive(Clone, Debug)]
pub struct BlockProduct {
    modulator: TrigPoly,
    carrier: TrigPoly,
    step: i64,
    product: TrigPoly,
}

pub fn special_product(
    modulator: &TrigPoly,
    carrier: &TrigPoly,
    step: i64,
) -> Result<BlockProduct, TrigPolyError> {
    if !modulator.is_integer_spectrum() {
        return Err(TrigPolyError::NonIntegerModulator);
    }
    let degree = carrier.degree();
    if !(step as f64 > 2.0 * degree) || step <= 0 {
        return Err(TrigPolyError::StepTooSmall { l: step, degree });
    }
    let mut terms = Vec::with_capacity(modulator.len() * carrier.len());
    for q in modulator.terms() {
        let base = q
            .freq
            .integer_part()
            .checked_mul(step)
            .ok_or(TrigPolyError::FrequencyOverflow)?;
        for p in carrier.terms() {
            terms.push(Term {
                freq: p.freq.shifted(base)?,
                coeff: q.coeff * p.coeff,
            });
        }
    }
    // Products of nonzero doubles can underflow to zero; such terms are kept
    // out of the polynomial but the block layout is then no longer dense.
    let product = TrigPoly::from_sorted_terms(terms)?;
    Ok(BlockProduct {
        modulator: modulator.clone(),
        carrier: carrier.clone(),
        step,
        product,
    })
}

impl BlockProduct {
    pub fn modulator(&self) -> &TrigPoly {
        &self.modulator
    }

    pub fn carrier(&self) -> &TrigPoly {
        &self.carrier
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn product(&self) -> &TrigPoly {
        &self.product
    }

    /// Every block `(j, index into carrier, frequency, coefficient)`, in
    /// frequency order.
    pub fn blocks(&self) -> impl Iterator<Item = (i64, usize, Frequency, Complex64)> + '_ {
        self.modulator.terms().iter().flat_map(move |q| {
            let j = q.freq.integer_part();
            self.carrier.terms().iter().enumerate().map(move |(i, p)| {
                let freq = p.freq.shifted(j * self.step).expect("checked at construction");
                (j, i, freq, q.coeff * p.coeff)
            })
        })
    }

    /// `sum_{j,mu} |Q(j)| |P(mu)|`, accumulated exactly and rounded once.
    pub fn norm1(&self) -> f64 {
        let mut acc = ExactSum::new();
        for q in self.modulator.terms() {
            let a = q.coeff.norm();
            for p in self.carrier.terms() {
                acc.add_product(a, p.coeff.norm());
            }
        }
        acc.to_f64()
    }

    /// `(sum_j |Q(j)|)(sum_mu |P(mu)|)`, accumulated exactly and rounded once.
    pub fn factor_norm_product(&self) -> f64 {
        let mut a = ExactSum::new();
        self.modulator.terms().iter().for_each(|t| a.add(t.coeff.norm()));
        let mut b = ExactSum::new();
        self.carrier.terms().iter().for_each(|t| b.add(t.coeff.norm()));
        a.times(&b).to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_pair() -> (TrigPoly, TrigPoly) {
        let q = TrigPoly::from_integer_coeffs(-1, &[c(0.5, 0.0), c(0.0, 0.0), c(-0.25, 0.5)]).unwrap();
        let p = TrigPoly::from_terms(vec![
            Term { freq: Frequency::new(-1, 0.25).unwrap(), coeff: c(1.0, 1.0) },
            Term { freq: Frequency::new(2, 0.125).unwrap(), coeff: c(0.3, 0.0) },
        ])
        .unwrap();
        (q, p)
    }

    #[test]
    fn coefficients_sit_on_shifted_blocks() {
        let (q, p) = sample_pair();
        let h = special_product(&q, &p, 5).unwrap();
        let prod = h.product();
        assert_eq!(prod.len(), 4);
        assert_eq!(prod.coefficient(Frequency::new(-6, 0.25).unwrap()), c(0.5, 0.5));
        assert_eq!(prod.coefficient(Frequency::new(7, 0.125).unwrap()), c(-0.075, 0.15));
        for x in [0.0, 0.4, -2.0] {
            let direct = q.evaluate(5.0 * x) * p.evaluate(x);
            assert!((prod.evaluate(x) - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn preconditions() {
        let (q, p) = sample_pair();
        assert!(matches!(special_product(&q, &p, 4), Err(TrigPolyError::StepTooSmall { .. })));
        assert!(matches!(special_product(&p, &q, 9), Err(TrigPolyError::NonIntegerModulator)));
    }

    #[test]
    fn empty_factors() {
        let (q, _) = sample_pair();
        let h = special_product(&q, &TrigPoly::zero(), 1).unwrap();
        assert!(h.product().is_empty());
        assert_eq!(h.norm1(), 0.0);
    }

    #[test]
    fn norms_multiply() {
        let (q, p) = sample_pair();
        let h = special_product(&q, &p, 7).unwrap();
        assert_eq!(h.norm1(), h.factor_norm_product());
        let naive = h.product().coeff_norms().l1;
        assert!((naive - h.norm1()).abs() <= 1e-15 * naive);
    }
}

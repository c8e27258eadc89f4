//! Finite exponential sums with real frequencies.

mod exact;
mod frequency;
pub mod majorant;
pub mod phase;
mod product;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::{exact_sum, ExactSum};
pub use frequency::{format_offset, parse_offset, Frequency, MAX_INTEGER_PART};
pub use product::{special_product, BlockProduct};

use frequency::canonical_from_parts;
use phase::unit_phasor;

#[derive(Debug, Error)]
pub enum TrigPolyError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("frequency integer part out of range")]
    FrequencyOverflow,
    #[error("frequencies must be strictly increasing (term {index})")]
    Unsorted { index: usize },
    #[error("modulator spectrum is not contained in the integers")]
    NonIntegerModulator,
    #[error("modulation step {l} must exceed twice the carrier degree {degree}")]
    StepTooSmall { l: i64, degree: f64 },
    #[error("contraction factor must be positive, got {0}")]
    BadContraction(i64),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub freq: Frequency,
    pub coeff: Complex64,
}

/// Coefficient norms of a polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffNorms {
    pub l1: f64,
    pub linf: f64,
    pub l2: f64,
}

/// `sum_j c_j exp(i lambda_j x)` with strictly increasing frequencies and no
/// zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TermRecord>", into = "Vec<TermRecord>")]
pub struct TrigPoly {
    terms: Vec<Term>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly { terms: Vec::new() }
    }

    /// Sorts the terms, merging equal frequencies and dropping zero sums.
    pub fn from_terms<I: IntoIterator<Item = Term>>(terms: I) -> Result<Self, TrigPolyError> {
        let mut terms: Vec<Term> = terms.into_iter().collect();
        for t in &terms {
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(TrigPolyError::NonFinite("coefficient"));
            }
        }
        terms.sort_by(|a, b| a.freq.cmp(&b.freq));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.freq == t.freq => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        Ok(TrigPoly { terms: merged })
    }

    /// Accepts terms that are already strictly increasing; zero coefficients
    /// are dropped.
    pub fn from_sorted_terms(terms: Vec<Term>) -> Result<Self, TrigPolyError> {
        for (i, w) in terms.windows(2).enumerate() {
            if w[0].freq >= w[1].freq {
                return Err(TrigPolyError::Unsorted { index: i + 1 });
            }
        }
        for t in &terms {
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(TrigPolyError::NonFinite("coefficient"));
            }
        }
        let mut terms = terms;
        terms.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        Ok(TrigPoly { terms })
    }

    /// Polynomial with integer frequencies `first, first+1, ...`.
    pub fn from_integer_coeffs(first: i64, coeffs: &[Complex64]) -> Result<Self, TrigPolyError> {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| Term {
                freq: Frequency::integer(first + k as i64),
                coeff: c,
            })
            .collect();
        Self::from_sorted_terms(terms)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `|lambda|` in the spectrum, 0 for the zero polynomial.
    pub fn degree(&self) -> f64 {
        match (self.terms.first(), self.terms.last()) {
            (Some(a), Some(b)) => a.freq.abs_value().max(b.freq.abs_value()),
            _ => 0.0,
        }
    }

    pub fn is_integer_spectrum(&self) -> bool {
        self.terms.iter().all(|t| t.freq.is_integer())
    }

    pub fn coefficient(&self, freq: Frequency) -> Complex64 {
        match self.terms.binary_search_by(|t| t.freq.cmp(&freq)) {
            Ok(i) => self.terms[i].coeff,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn coeff_norms(&self) -> CoeffNorms {
        let moduli = self.terms.iter().map(|t| t.coeff.norm());
        let l1 = exact_sum(moduli.clone());
        let linf = moduli.clone().fold(0.0, f64::max);
        let l2 = exact_sum(self.terms.iter().map(|t| t.coeff.norm_sqr())).sqrt();
        CoeffNorms { l1, linf, l2 }
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * unit_phasor(t.freq, x))
            .sum()
    }

    pub fn evaluate_many(&self, xs: &[f64]) -> Vec<Complex64> {
        xs.par_iter().map(|&x| self.evaluate(x)).collect()
    }

    /// [`TrigPoly::majorant`] at every point.
    pub fn majorant_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.par_iter().map(|&x| self.majorant(x)).collect()
    }

    /// Prefix sums `Z_0 = 0, Z_j = c_0 e_0(x) + ... + c_{j-1} e_{j-1}(x)` in
    /// frequency order.
    pub fn partial_sum_points(&self, x: f64) -> Vec<Complex64> {
        let mut pts = Vec::with_capacity(self.terms.len() + 1);
        let mut acc = Complex64::new(0.0, 0.0);
        pts.push(acc);
        for t in &self.terms {
            acc += t.coeff * unit_phasor(t.freq, x);
            pts.push(acc);
        }
        pts
    }

    /// Largest modulus of a frequency-window sum at `x`.
    pub fn majorant(&self, x: f64) -> f64 {
        majorant::diameter(&self.partial_sum_points(x))
    }

    /// Same quantity as [`TrigPoly::majorant`], by checking every window.
    pub fn majorant_brute_force(&self, x: f64) -> f64 {
        majorant::diameter_brute_force(&self.partial_sum_points(x))
    }

    /// Sum of the terms with `a <= lambda <= b`.
    pub fn window_sum(&self, x: f64, a: f64, b: f64) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| {
                let v = t.freq.value();
                a <= v && v <= b
            })
            .map(|t| t.coeff * unit_phasor(t.freq, x))
            .sum()
    }

    /// The polynomial `P(l x)`.
    pub fn contract(&self, l: i64) -> Result<Self, TrigPolyError> {
        if l <= 0 {
            return Err(TrigPolyError::BadContraction(l));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(Term {
                    freq: t.freq.scaled(l)?,
                    coeff: t.coeff,
                })
            })
            .collect::<Result<Vec<_>, TrigPolyError>>()?;
        Self::from_terms(terms)
    }

    /// Pointwise product; coinciding sum frequencies are merged.
    pub fn multiply(&self, other: &TrigPoly) -> Result<Self, TrigPolyError> {
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                let freq = Frequency::new(
                    a.freq
                        .integer_part()
                        .checked_add(b.freq.integer_part())
                        .ok_or(TrigPolyError::FrequencyOverflow)?,
                    a.freq.offset() + b.freq.offset(),
                )?;
                terms.push(Term {
                    freq,
                    coeff: a.coeff * b.coeff,
                });
            }
        }
        Self::from_terms(terms)
    }

    pub fn add(&self, other: &TrigPoly) -> Self {
        Self::from_terms(self.terms.iter().chain(other.terms.iter()).copied())
            .expect("sum of finite polynomials")
    }

    pub fn sub(&self, other: &TrigPoly) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                freq: t.freq,
                coeff: t.coeff * factor,
            })
            .filter(|t| t.coeff != Complex64::new(0.0, 0.0))
            .collect();
        TrigPoly { terms }
    }

    /// Terms whose frequency satisfies the predicate, in order.
    pub fn filter<F: Fn(&Term) -> bool>(&self, keep: F) -> Self {
        TrigPoly {
            terms: self.terms.iter().filter(|t| keep(t)).copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polynomial serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, TrigPolyError> {
        serde_json::from_str(text).map_err(|e| TrigPolyError::Parse(e.to_string()))
    }
}

/// Serialised form of one term; the offset is a decimal string.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub n: i64,
    pub offset: String,
    pub re: f64,
    pub im: f64,
}

impl From<TrigPoly> for Vec<TermRecord> {
    fn from(p: TrigPoly) -> Self {
        p.terms
            .iter()
            .map(|t| TermRecord {
                n: t.freq.integer_part(),
                offset: format_offset(t.freq.offset()),
                re: t.coeff.re,
                im: t.coeff.im,
            })
            .collect()
    }
}

impl TryFrom<Vec<TermRecord>> for TrigPoly {
    type Error = TrigPolyError;

    fn try_from(records: Vec<TermRecord>) -> Result<Self, Self::Error> {
        let terms = records
            .into_iter()
            .map(|r| {
                Ok(Term {
                    freq: canonical_from_parts(r.n, parse_offset(&r.offset)?)?,
                    coeff: Complex64::new(r.re, r.im),
                })
            })
            .collect::<Result<Vec<_>, TrigPolyError>>()?;
        TrigPoly::from_sorted_terms(terms)
    }
}

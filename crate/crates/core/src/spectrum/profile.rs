use serde::{Deserialize, Serialize};

use crate::trigpoly::{Frequency, TrigPolyError};

use super::SpectrumError;

/// Target offset `sigma(q)` for the index `s l + q` of a block.
///
/// Every profile has the form `scale * ratio^(-|q|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftProfile {
    /// `2^(-|q|-2)`: fits inside `(-1/2, 1/2)` and keeps `q + sigma(q)` distinct.
    Default,
    /// `2^(-|q|+1)`: the profile used in the original argument. Its values
    /// at `q = 0, +-1` lie outside the support of a half-width `1/2` law.
    Paper,
    Geometric { name: String, scale: f64, ratio: f64 },
}

impl Default for ShiftProfile {
    fn default() -> Self {
        ShiftProfile::Default
    }
}

impl ShiftProfile {
    pub fn name(&self) -> &str {
        match self {
            ShiftProfile::Default => "default",
            ShiftProfile::Paper => "paper",
            ShiftProfile::Geometric { name, .. } => name,
        }
    }

    fn parameters(&self) -> (f64, f64) {
        match self {
            ShiftProfile::Default => (0.25, 2.0),
            ShiftProfile::Paper => (2.0, 2.0),
            ShiftProfile::Geometric { scale, ratio, .. } => (*scale, *ratio),
        }
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        let (scale, ratio) = self.parameters();
        if !(scale.is_finite() && scale > 0.0 && ratio.is_finite() && ratio > 1.0) {
            return Err(SpectrumError::InvalidProfile(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn shift(&self, q: i64) -> f64 {
        let (scale, ratio) = self.parameters();
        let m = q.unsigned_abs().min(i32::MAX as u64) as i32;
        scale * ratio.powi(-m)
    }

    /// The frequency `q + sigma(q)`.
    pub fn shifted_frequency(&self, q: i64) -> Result<Frequency, TrigPolyError> {
        Frequency::new(q, self.shift(q))
    }

    /// Recovers `q` from `q + sigma(q)`; `None` when no `q` maps there or when
    /// two do.
    pub fn index_of(&self, freq: Frequency) -> Option<i64> {
        let centre = freq.integer_part();
        let (scale, _) = self.parameters();
        let reach = scale.ceil() as i64 + 1;
        let mut found = None;
        for q in centre - reach..=centre + reach {
            if self.shifted_frequency(q).ok() == Some(freq) {
                if found.is_some() {
                    return None;
                }
                found = Some(q);
            }
        }
        found
    }

    /// Whether `q -> q + sigma(q)` is injective on `|q| <= max_q`.
    pub fn is_injective_up_to(&self, max_q: i64) -> bool {
        let mut freqs: Vec<Frequency> = (-max_q..=max_q)
            .filter_map(|q| self.shifted_frequency(q).ok())
            .collect();
        let before = freqs.len();
        freqs.sort();
        freqs.dedup();
        freqs.len() == before
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_values() {
        let p = ShiftProfile::Default;
        assert_eq!(p.shift(0), 0.25);
        assert_eq!(p.shift(1), 0.125);
        assert_eq!(p.shift(-1), 0.125);
        assert_eq!(p.shift(-5), 2f64.powi(-7));
    }

    #[test]
    fn wide_profile_values_and_collision() {
        let p = ShiftProfile::Paper;
        assert_eq!(p.shift(0), 2.0);
        assert_eq!(p.shift(1), 1.0);
        assert_eq!(p.shifted_frequency(0).unwrap(), p.shifted_frequency(1).unwrap());
        assert!(!p.is_injective_up_to(3));
        assert_eq!(p.index_of(Frequency::integer(2)), None);
    }

    #[test]
    fn default_is_injective_and_invertible() {
        let p = ShiftProfile::Default;
        assert!(p.is_injective_up_to(200));
        for q in -60..=60 {
            assert_eq!(p.index_of(p.shifted_frequency(q).unwrap()), Some(q));
        }
    }

    #[test]
    fn validation() {
        let bad = ShiftProfile::Geometric { name: "flat".into(), scale: 0.1, ratio: 1.0 };
        assert!(bad.validate().is_err());
        assert!(ShiftProfile::Default.validate().is_ok());
    }
}

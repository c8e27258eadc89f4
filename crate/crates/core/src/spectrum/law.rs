use serde::{Deserialize, Serialize};

use super::SpectrumError;

/// Half-width `d(n)` of the uniform perturbation at index `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HalfWidthLaw {
    /// `d(n) = d`.
    Constant { d: f64 },
    /// `d(n) = d0 (1 + |n|)^(-alpha)`.
    Power { d0: f64, alpha: f64 },
    /// `d(n) = d0 / ln(e + |n|)`.
    Logarithmic { d0: f64 },
}

impl Default for HalfWidthLaw {
    fn default() -> Self {
        HalfWidthLaw::Constant { d: 0.5 }
    }
}

impl HalfWidthLaw {
    pub fn validate(&self) -> Result<(), SpectrumError> {
        let (scale, exponent_ok) = match *self {
            HalfWidthLaw::Constant { d } => (d, true),
            HalfWidthLaw::Power { d0, alpha } => (d0, alpha.is_finite() && alpha >= 0.0),
            HalfWidthLaw::Logarithmic { d0 } => (d0, true),
        };
        if !(scale > 0.0 && scale <= 0.5) || !exponent_ok {
            return Err(SpectrumError::InvalidLaw(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn half_width(&self, n: i64) -> f64 {
        let m = n.unsigned_abs() as f64;
        match *self {
            HalfWidthLaw::Constant { d } => d,
            HalfWidthLaw::Power { d0, alpha } => d0 * (1.0 + m).powf(-alpha),
            HalfWidthLaw::Logarithmic { d0 } => d0 / (std::f64::consts::E + m).ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(HalfWidthLaw::default().half_width(-1000), 0.5);
        let p = HalfWidthLaw::Power { d0: 0.5, alpha: 1.0 };
        assert_eq!(p.half_width(0), 0.5);
        assert_eq!(p.half_width(-3), 0.125);
        let l = HalfWidthLaw::Logarithmic { d0: 0.5 };
        assert!((l.half_width(0) - 0.5).abs() < 1e-15);
        assert!(l.half_width(10_000) < 0.06);
    }

    #[test]
    fn validation() {
        assert!(HalfWidthLaw::Constant { d: 0.6 }.validate().is_err());
        assert!(HalfWidthLaw::Constant { d: 0.0 }.validate().is_err());
        assert!(HalfWidthLaw::Power { d0: 0.5, alpha: -1.0 }.validate().is_err());
        assert!(HalfWidthLaw::Logarithmic { d0: 0.25 }.validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let p = HalfWidthLaw::Power { d0: 0.375, alpha: 0.5 };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<HalfWidthLaw>(&s).unwrap(), p);
    }
}

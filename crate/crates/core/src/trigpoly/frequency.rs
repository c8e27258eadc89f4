use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::TrigPolyError;

/// A real frequency stored as an integer part plus an offset in `(-1/2, 1/2]`.
///
/// Keeping the integer part exact lets spectra reach magnitudes far beyond the
/// point where a plain `f64` can still resolve the fractional part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrequencyRecord", into = "FrequencyRecord")]
pub struct Frequency {
    integer: i64,
    offset: f64,
}

/// Largest integer part accepted; keeps `integer as f64` exact.
pub const MAX_INTEGER_PART: i64 = 1 << 52;

impl Frequency {
    pub const ZERO: Frequency = Frequency {
        integer: 0,
        offset: 0.0,
    };

    /// Builds a frequency from any finite offset, moving whole units into the
    /// integer part.
    pub fn new(integer: i64, offset: f64) -> Result<Self, TrigPolyError> {
        if !offset.is_finite() {
            return Err(TrigPolyError::NonFinite("frequency offset"));
        }
        let carry = (offset - 0.5).ceil();
        if carry.abs() > MAX_INTEGER_PART as f64 {
            return Err(TrigPolyError::FrequencyOverflow);
        }
        let mut integer = integer
            .checked_add(carry as i64)
            .ok_or(TrigPolyError::FrequencyOverflow)?;
        let mut offset = offset - carry;
        // ceil() can land one unit off when offset - 0.5 rounds.
        if offset <= -0.5 {
            offset += 1.0;
            integer -= 1;
        } else if offset > 0.5 {
            offset -= 1.0;
            integer += 1;
        }
        if integer.abs() > MAX_INTEGER_PART {
            return Err(TrigPolyError::FrequencyOverflow);
        }
        Ok(Frequency {
            integer,
            offset: offset + 0.0,
        })
    }

    pub fn integer(n: i64) -> Self {
        Frequency {
            integer: n,
            offset: 0.0,
        }
    }

    pub fn integer_part(&self) -> i64 {
        self.integer
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_integer(&self) -> bool {
        self.offset == 0.0
    }

    /// Nearest `f64` to the frequency.
    pub fn value(&self) -> f64 {
        self.integer as f64 + self.offset
    }

    pub fn abs_value(&self) -> f64 {
        self.value().abs()
    }

    /// Multiplies both parts by `l` and renormalises.
    pub fn scaled(&self, l: i64) -> Result<Self, TrigPolyError> {
        let integer = self
            .integer
            .checked_mul(l)
            .ok_or(TrigPolyError::FrequencyOverflow)?;
        Frequency::new(integer, self.offset * l as f64)
    }

    /// Adds an integer to the frequency.
    pub fn shifted(&self, n: i64) -> Result<Self, TrigPolyError> {
        let integer = self
            .integer
            .checked_add(n)
            .ok_or(TrigPolyError::FrequencyOverflow)?;
        if integer.abs() > MAX_INTEGER_PART {
            return Err(TrigPolyError::FrequencyOverflow);
        }
        Ok(Frequency {
            integer,
            offset: self.offset,
        })
    }

    pub fn neg(&self) -> Self {
        if self.offset == 0.5 {
            Frequency {
                integer: -self.integer - 1,
                offset: 0.5,
            }
        } else {
            Frequency {
                integer: -self.integer,
                offset: -self.offset + 0.0,
            }
        }
    }
}

impl Eq for Frequency {}

impl Ord for Frequency {
    fn cmp(&self, other: &Self) -> Ordering {
        self.integer
            .cmp(&other.integer)
            .then(self.offset.total_cmp(&other.offset))
    }
}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset == 0.0 {
            write!(f, "{}", self.integer)
        } else if self.offset > 0.0 {
            write!(f, "{}+{}", self.integer, self.offset)
        } else {
            write!(f, "{}{}", self.integer, self.offset)
        }
    }
}

/// Offsets are written with 17 significant digits so they survive a decimal
/// round trip bit for bit.
pub fn format_offset(offset: f64) -> String {
    format!("{:.16e}", offset)
}

pub fn parse_offset(text: &str) -> Result<f64, TrigPolyError> {
    text.trim()
        .parse::<f64>()
        .map_err(|e| TrigPolyError::Parse(format!("offset {text:?}: {e}")))
}

#[derive(Serialize, Deserialize)]
struct FrequencyRecord {
    n: i64,
    offset: String,
}

impl From<Frequency> for FrequencyRecord {
    fn from(f: Frequency) -> Self {
        FrequencyRecord {
            n: f.integer,
            offset: format_offset(f.offset),
        }
    }
}

impl TryFrom<FrequencyRecord> for Frequency {
    type Error = TrigPolyError;

    fn try_from(r: FrequencyRecord) -> Result<Self, Self::Error> {
        canonical_from_parts(r.n, parse_offset(&r.offset)?)
    }
}

/// Rejects non-canonical pairs instead of silently renormalising them.
pub(crate) fn canonical_from_parts(n: i64, offset: f64) -> Result<Frequency, TrigPolyError> {
    let f = Frequency::new(n, offset)?;
    if f.integer != n || f.offset.to_bits() != (offset + 0.0).to_bits() {
        return Err(TrigPolyError::Parse(format!(
            "frequency ({n}, {offset}) is not in canonical form"
        )));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_offsets() {
        let f = Frequency::new(3, 0.7).unwrap();
        assert_eq!(f.integer_part(), 4);
        assert!((f.offset() + 0.3).abs() < 1e-15);

        let half = Frequency::new(0, 0.5).unwrap();
        assert_eq!((half.integer_part(), half.offset()), (0, 0.5));
        let minus_half = Frequency::new(0, -0.5).unwrap();
        assert_eq!((minus_half.integer_part(), minus_half.offset()), (-1, 0.5));

        let two = Frequency::new(0, 2.0).unwrap();
        assert_eq!(two, Frequency::integer(2));
        assert!(Frequency::new(0, f64::NAN).is_err());
    }

    #[test]
    fn negative_zero_offset_is_normalised() {
        let f = Frequency::new(5, -0.0).unwrap();
        assert_eq!(f.offset().to_bits(), 0.0f64.to_bits());
        assert_eq!(f, Frequency::integer(5));
    }

    #[test]
    fn ordering_matches_values() {
        let mut v = vec![
            Frequency::new(1, 0.25).unwrap(),
            Frequency::new(1, -0.25).unwrap(),
            Frequency::integer(-3),
            Frequency::new(0, 0.5).unwrap(),
        ];
        v.sort();
        let values: Vec<f64> = v.iter().map(Frequency::value).collect();
        assert_eq!(values, vec![-3.0, 0.5, 0.75, 1.25]);
    }

    #[test]
    fn scaling_renormalises() {
        let f = Frequency::new(2, 0.25).unwrap().scaled(3).unwrap();
        assert_eq!((f.integer_part(), f.offset()), (7, -0.25));
        assert!(Frequency::integer(MAX_INTEGER_PART).scaled(4).is_err());
    }

    #[test]
    fn negation() {
        let f = Frequency::new(2, 0.5).unwrap();
        assert_eq!(f.neg().value(), -2.5);
        let g = Frequency::new(-7, 0.125).unwrap();
        assert_eq!(g.neg().value(), 6.875);
    }

    #[test]
    fn offset_text_round_trip() {
        for &o in &[0.1, -0.3333333333333333, 0.5, 1e-300, 2.0f64.powi(-40) / 3.0] {
            let back = parse_offset(&format_offset(o)).unwrap();
            assert_eq!(back.to_bits(), o.to_bits());
        }
    }

    #[test]
    fn json_round_trip() {
        let f = Frequency::new(-12, 0.1234567890123456789).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: Frequency = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.offset().to_bits(), f.offset().to_bits());
        assert!(serde_json::from_str::<Frequency>(r#"{"n":0,"offset":"0.75"}"#).is_err());
    }
}

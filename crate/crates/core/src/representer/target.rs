use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approximator::{FitError, GridFunction};
use crate::spectrum::ShiftProfile;
use crate::trigpoly::phase::phase;

/// The function being represented.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Zero,
    /// Indicator of `[0, 1]`.
    Step,
    /// `x / pi` reduced to `[-1, 1)`, with period `2 pi`.
    Sawtooth,
    /// `exp(i (q + sigma(q)) x)` on `[-pi, pi]` and zero outside.
    SingleExponential { q: i64, profile: ShiftProfile },
    /// Tabulated samples; stage grids must be sub-grids of this one.
    Samples { grid: GridFunction },
}

impl Target {
    pub fn preset(name: &str) -> Option<Target> {
        match name {
            "zero" => Some(Target::Zero),
            "step" => Some(Target::Step),
            "sawtooth" => Some(Target::Sawtooth),
            "single-exponential" | "single_exponential" | "single-exp" => Some(Target::SingleExponential {
                q: 1,
                profile: ShiftProfile::Default,
            }),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Target::Zero => "zero",
            Target::Step => "step",
            Target::Sawtooth => "sawtooth",
            Target::SingleExponential { .. } => "single-exponential",
            Target::Samples { .. } => "samples",
        }
    }

    /// Samples on `x_j = pi (-a + j b)`.
    pub fn sample(&self, half_length_pi: f64, step_pi: f64) -> Result<GridFunction, FitError> {
        let real = |v: f64| Complex64::new(v, 0.0);
        match self {
            Target::Zero => GridFunction::sample(half_length_pi, step_pi, |_| real(0.0)),
            Target::Step => GridFunction::sample(half_length_pi, step_pi, |x| {
                real(if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 })
            }),
            Target::Sawtooth => GridFunction::sample(half_length_pi, step_pi, |x| {
                real((x + PI).rem_euclid(2.0 * PI) / PI - 1.0)
            }),
            Target::SingleExponential { q, profile } => {
                let f = profile.shifted_frequency(*q)?;
                GridFunction::sample(half_length_pi, step_pi, |x| {
                    if x.abs() <= PI {
                        Complex64::from_polar(1.0, phase(f, x))
                    } else {
                        real(0.0)
                    }
                })
            }
            Target::Samples { grid } => {
                let stride = step_pi / grid.step_pi();
                let offset = (grid.half_length_pi() - half_length_pi) / grid.step_pi();
                if stride.fract() != 0.0 || stride < 1.0 || offset.fract() != 0.0 || offset < 0.0 {
                    return Err(FitError::InvalidGrid(format!(
                        "grid ({half_length_pi} pi, step {step_pi} pi) is not a sub-grid of the samples"
                    )));
                }
                let (stride, offset) = (stride as usize, offset as usize);
                let n = (2.0 * half_length_pi / step_pi).floor() as usize + 1;
                let samples = (0..n)
                    .map(|j| grid.samples().get(offset + j * stride).copied())
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| FitError::InvalidGrid("samples do not cover the interval".into()))?;
                GridFunction::new(half_length_pi, step_pi, samples)
            }
        }
    }
}

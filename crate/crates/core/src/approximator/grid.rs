use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FitError;

/// Samples on `x_j = pi * (-a + j b)`, `j = 0..=floor(2a/b)`.
///
/// The interval `[-L, L]` and the step are stored as multiples of `pi`, so the
/// geometry itself is exact and only the final product with `pi` rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    half_length_pi: f64,
    step_pi: f64,
    samples: Vec<Complex64>,
}

/// Extent of an exceedance set counted on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    pub measure: f64,
    /// One grid step per transition between good and bad samples.
    pub uncertainty: f64,
    pub count: usize,
}

fn point_count(half_length_pi: f64, step_pi: f64) -> usize {
    (2.0 * half_length_pi / step_pi).floor() as usize + 1
}

fn check_geometry(half_length_pi: f64, step_pi: f64) -> Result<(), FitError> {
    if !(half_length_pi.is_finite() && half_length_pi > 0.0 && step_pi.is_finite() && step_pi > 0.0) {
        return Err(FitError::InvalidGrid(format!(
            "half length {half_length_pi} pi and step {step_pi} pi must be positive"
        )));
    }
    if step_pi > 2.0 * half_length_pi {
        return Err(FitError::InvalidGrid("step exceeds the interval".into()));
    }
    Ok(())
}

impl GridFunction {
    pub fn new(half_length_pi: f64, step_pi: f64, samples: Vec<Complex64>) -> Result<Self, FitError> {
        check_geometry(half_length_pi, step_pi)?;
        let expected = point_count(half_length_pi, step_pi);
        if samples.len() != expected {
            return Err(FitError::InvalidGrid(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        Ok(GridFunction {
            half_length_pi,
            step_pi,
            samples,
        })
    }

    pub fn sample<F: FnMut(f64) -> Complex64>(half_length_pi: f64, step_pi: f64, mut f: F) -> Result<Self, FitError> {
        check_geometry(half_length_pi, step_pi)?;
        let n = point_count(half_length_pi, step_pi);
        let samples = (0..n).map(|j| f(PI * (j as f64 * step_pi - half_length_pi))).collect();
        Ok(GridFunction {
            half_length_pi,
            step_pi,
            samples,
        })
    }

    /// Largest step `pi / 2^m` not exceeding `pi / (4 (max_degree + 1))`.
    pub fn dyadic_step_for(max_degree: u64) -> f64 {
        let bound = 1.0 / (4.0 * (max_degree as f64 + 1.0));
        let mut step = 1.0;
        while step > bound {
            step *= 0.5;
        }
        step
    }

    pub fn half_length(&self) -> f64 {
        PI * self.half_length_pi
    }

    pub fn half_length_pi(&self) -> f64 {
        self.half_length_pi
    }

    pub fn step(&self) -> f64 {
        PI * self.step_pi
    }

    pub fn step_pi(&self) -> f64 {
        self.step_pi
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        PI * (j as f64 * self.step_pi - self.half_length_pi)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.half_length_pi == other.half_length_pi && self.step_pi == other.step_pi
    }

    pub fn map<F: FnMut(f64, Complex64) -> Complex64>(&self, mut f: F) -> GridFunction {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, &v)| f(self.x(j), v))
            .collect();
        GridFunction { samples, ..*self }
    }

    /// `self - other` on a shared grid.
    pub fn difference(&self, other: &GridFunction) -> Result<GridFunction, FitError> {
        if !self.same_grid(other) {
            return Err(FitError::GridMismatch);
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(GridFunction { samples, ..*self })
    }

    /// The same samples on the wider interval `[-b pi, b pi]`, zero outside
    /// the original one.
    pub fn zero_extend(&self, half_length_pi: f64) -> Result<GridFunction, FitError> {
        let pad = (half_length_pi - self.half_length_pi) / self.step_pi;
        if pad < 0.0 || pad.fract() != 0.0 {
            return Err(FitError::InvalidGrid(format!(
                "cannot extend [-{} pi, {} pi] to [-{half_length_pi} pi, {half_length_pi} pi] on step {} pi",
                self.half_length_pi, self.half_length_pi, self.step_pi
            )));
        }
        let pad = pad as usize;
        let zero = Complex64::new(0.0, 0.0);
        let mut samples = vec![zero; pad];
        samples.extend_from_slice(&self.samples);
        samples.resize(self.samples.len() + 2 * pad, zero);
        GridFunction::new(half_length_pi, self.step_pi, samples)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Measure of `{x : |g(x)| > threshold}` counted on the grid.
    pub fn exceedance(&self, threshold: f64) -> GridMeasure {
        let h = self.step();
        let mut count = 0;
        let mut crossings = 0;
        let mut previous = None;
        for v in &self.samples {
            let bad = v.norm() > threshold;
            if bad {
                count += 1;
            }
            if previous.is_some_and(|p| p != bad) {
                crossings += 1;
            }
            previous = Some(bad);
        }
        GridMeasure {
            measure: h * count as f64,
            uncertainty: h * crossings as f64,
            count,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FitError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "re", "im"]).map_err(FitError::csv)?;
        for (j, v) in self.samples.iter().enumerate() {
            w.write_record([
                format!("{:e}", self.x(j)),
                format!("{:e}", v.re),
                format!("{:e}", v.im),
            ])
            .map_err(FitError::csv)?;
        }
        w.flush().map_err(|e| FitError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads columns `x, re, im`. The abscissae must form a symmetric uniform
    /// grid whose half length and step are multiples of `pi` by dyadic
    /// rationals with at most 30 fractional bits.
    pub fn read_csv<R: Read>(input: R) -> Result<GridFunction, FitError> {
        let mut reader = csv::Reader::from_reader(input);
        let mut xs = Vec::new();
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(FitError::csv)?;
            if record.len() != 3 {
                return Err(FitError::InvalidGrid(format!("expected 3 columns, got {}", record.len())));
            }
            let field = |i: usize| -> Result<f64, FitError> {
                record[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| FitError::InvalidGrid(format!("column {i}: {e}")))
            };
            xs.push(field(0)?);
            samples.push(Complex64::new(field(1)?, field(2)?));
        }
        if xs.len() < 2 {
            return Err(FitError::InvalidGrid("need at least two samples".into()));
        }
        let snap = |v: f64| (v * (1u64 << 30) as f64).round() / (1u64 << 30) as f64;
        let half_length_pi = snap(-xs[0] / PI);
        let step_pi = snap((xs[1] - xs[0]) / PI);
        let grid = GridFunction::new(half_length_pi, step_pi, samples)?;
        let tolerance = 1e-9 * grid.half_length().max(1.0);
        for (j, &x) in xs.iter().enumerate() {
            if (x - grid.x(j)).abs() > tolerance {
                return Err(FitError::InvalidGrid(format!(
                    "abscissa {j} is {x}, expected {}",
                    grid.x(j)
                )));
            }
        }
        Ok(grid)
    }
}

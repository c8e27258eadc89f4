use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_special_product_bound, AnalysisError, SpecialProductCheck};
use crate::approximator::GridFunction;
use crate::representer::{RepresentationState, StageRecord};
use crate::trigpoly::exact_sum;

/// A completed block rechecked from the stored coefficients, witness and
/// factors, without reading the numbers the run recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageVerification {
    pub n: u32,
    pub k: i64,
    /// Terms of `A_N` whose index lies outside `I(k_N)` or whose frequency is
    /// not `lambda(n)`.
    pub terms_outside_block: usize,
    pub a_coeff_norm1: f64,
    /// `k_N ||F_N||_1 delta_N`.
    pub a_coeff_norm1_bound: f64,
    /// `sup |A_N - H_N|` on the stage grid.
    pub a_minus_h_sup: f64,
    /// `||H_N||_1 * jitter * N pi`.
    pub a_minus_h_bound: f64,
    pub jitter: f64,
    pub special_product: SpecialProductCheck,
}

impl StageVerification {
    pub fn spec_inside_block(&self) -> bool {
        self.terms_outside_block == 0
    }

    pub fn norm_within_bound(&self) -> bool {
        self.a_coeff_norm1 < self.a_coeff_norm1_bound
    }

    pub fn transplant_within_bound(&self) -> bool {
        self.a_minus_h_sup <= self.a_minus_h_bound
    }
}

/// `None` for a stage that did nothing.
pub fn verify_stage(state: &RepresentationState, stage: &StageRecord) -> Result<Option<StageVerification>, AnalysisError> {
    let Some(block) = &stage.block else {
        return Ok(None);
    };
    let h = stage
        .h()
        .ok_or_else(|| AnalysisError::InvalidParameter(format!("stage {} cannot rebuild H", stage.n)))?;
    let terms_outside_block = block
        .a
        .terms()
        .iter()
        .filter(|t| {
            let n = t.freq.integer_part();
            block.witness.locate(n).is_none() || state.spectrum.lambda(n) != t.freq
        })
        .count();
    let a_coeff_norm1 = exact_sum(block.a.terms().iter().map(|t| t.coeff.norm()));
    let h_norm1 = exact_sum(h.product().terms().iter().map(|t| t.coeff.norm()));
    let f_norm1 = exact_sum(stage.f.terms().iter().map(|t| t.coeff.norm()));

    let grid = GridFunction::sample(stage.tolerances.half_length_pi, stage.tolerances.step_pi, |_| {
        num_complex::Complex64::new(0.0, 0.0)
    })?;
    let xs = grid.points();
    let a_values = block.a.evaluate_many(&xs);
    let h_values = h.product().evaluate_many(&xs);
    let a_minus_h_sup = a_values
        .iter()
        .zip(&h_values)
        .fold(0.0f64, |m, (a, h)| m.max((a - h).norm()));
    let jitter = block.witness.jitter;
    Ok(Some(StageVerification {
        n: stage.n,
        k: block.k,
        terms_outside_block,
        a_coeff_norm1,
        a_coeff_norm1_bound: block.k as f64 * f_norm1 * block.parameters.delta,
        a_minus_h_sup,
        a_minus_h_bound: h_norm1 * jitter * stage.n as f64 * PI,
        jitter,
        special_product: check_special_product_bound(&h, &xs),
    }))
}

//! Stage-by-stage construction of a representation `sum c(n) exp(i lambda(n) x)`.
//!
//! Stage `N` fits `F_N` to the residual `f - S_{N-1}` on `[-N pi, N pi]`,
//! builds a correction `Q_N`, picks a block `I(k_N)` of the spectrum, and
//! moves the coefficients of `H_N(x) = Q_N(l x) F_N(x)` onto the frequencies
//! `lambda(s l + q)` of that block.

mod schedule;
mod target;

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use schedule::{Schedule, StageTolerances};
pub use target::Target;

use crate::approximator::{fit_in_measure, residual, FitError, FitReport, FitRequest, GridFunction, GridMeasure};
use crate::correction::{build_correction, CorrectionError, CorrectionPoly, CorrectionRequest, CorrectionStrategy};
use crate::spectrum::{block_reach, BlockWitness, HalfWidthLaw, PerturbedSpectrum, ShiftProfile, SpectrumError};
use crate::trigpoly::{special_product, BlockProduct, Term, TrigPoly, TrigPolyError, MAX_INTEGER_PART};

#[derive(Debug, Error)]
pub enum StageError {
    #[error("stage {stage}: fit failed: {source}")]
    Fit { stage: u32, source: FitError },
    #[error("stage {stage}: correction failed: {source}")]
    Correction { stage: u32, source: CorrectionError },
    #[error("stage {stage}: witness refused: {source}")]
    Witness { stage: u32, source: SpectrumError },
    #[error("stage {stage}: block k={k}, l={l} reaches past the representable frequency range")]
    FrequencyOverflow { stage: u32, k: i64, l: i64 },
    #[error("stage {stage}: {source}")]
    Poly { stage: u32, source: TrigPolyError },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl StageError {
    pub fn stage(&self) -> Option<u32> {
        match self {
            StageError::Fit { stage, .. }
            | StageError::Correction { stage, .. }
            | StageError::Witness { stage, .. }
            | StageError::FrequencyOverflow { stage, .. }
            | StageError::Poly { stage, .. } => Some(*stage),
            StageError::Config(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WitnessMode {
    /// Force the block condition with offsets `sigma(q) + u`, `|u| < jitter`.
    Plant { jitter: f64 },
    /// Search `l` in `[l_min, l_min + span]` for a block that occurs naturally.
    Scan { span: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schedule: Schedule,
    pub witness: WitnessMode,
    pub strategy: CorrectionStrategy,
    pub degree_budget: u64,
    pub oversample: usize,
    /// Half length, in units of `pi`, of the fixed window on which
    /// convergence is tracked.
    pub window_pi: f64,
    /// `D_N` steps the fitter may take past the schedule's cap.
    #[serde(default)]
    pub fit_degree_slack: u64,
    /// When set, `F_N` is fitted on `[-H pi, H pi]` against the residual on
    /// `[-N pi, N pi]` and zero beyond, which keeps each `F_N` small where
    /// later stages have to clean up after it.
    #[serde(default)]
    pub horizon_pi: Option<f64>,
    /// Fixed level `tau` of the convergence-in-measure diagnostic
    /// `m{x in window : |f - S_N| > tau}`.
    pub residual_threshold: f64,
    /// Fit every stage to the degree cap instead of stopping at the first
    /// degree that meets the budget.
    #[serde(default)]
    pub refine_fits: bool,
}

impl RunConfig {
    pub fn desk() -> Self {
        RunConfig {
            schedule: Schedule::desk(),
            witness: WitnessMode::Plant { jitter: 1e-9 },
            strategy: CorrectionStrategy::Analytic,
            degree_budget: 20_000,
            oversample: 8,
            window_pi: 1.0,
            fit_degree_slack: 0,
            horizon_pi: None,
            residual_threshold: 0.5,
            refine_fits: true,
        }
    }

    pub fn paper() -> Self {
        RunConfig {
            schedule: Schedule::paper(),
            ..Self::desk()
        }
    }
}

/// The lower bounds `k_N` must exceed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KConstraints {
    pub prev_k: i64,
    pub three_deg_f: f64,
    /// `||Q_N||_1 / delta_N`, known once `Q_N` is built.
    pub q_norm_over_delta: Option<f64>,
    /// `deg Q_N`, known once `Q_N` is built. Needed so the blocks of `H_N`
    /// stay inside `|q| < k`.
    pub deg_q: Option<f64>,
}

impl KConstraints {
    /// Smallest integer `k >= 2` strictly above every known bound.
    pub fn resolve(&self) -> i64 {
        let above = |v: f64| v.floor() as i64 + 1;
        let mut k = (self.prev_k + 1).max(above(self.three_deg_f)).max(2);
        if let Some(v) = self.q_norm_over_delta {
            k = k.max(above(v));
        }
        if let Some(v) = self.deg_q {
            k = k.max(above(v));
        }
        k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageParameters {
    pub delta: f64,
    pub eps: f64,
    pub f_norm1: f64,
    pub constraints: KConstraints,
}

/// Ceiling on `delta_N`. A small `F_N` would otherwise ask for `delta >= 1`,
/// which lets `Q_N` drift as far from 1 as from 0.
pub const MAX_DELTA: f64 = 0.5;

/// `delta_N = min(delta_scale / ||F||_1, MAX_DELTA)` and `eps_N` from the
/// stage tolerances, or `None` when `F` is empty and the stage does nothing.
pub fn choose_parameters(f: &TrigPoly, tolerances: &StageTolerances, prev_k: i64) -> Option<StageParameters> {
    if f.is_empty() {
        return None;
    }
    let f_norm1 = f.coeff_norms().l1;
    Some(StageParameters {
        delta: (tolerances.delta_scale / f_norm1).min(MAX_DELTA),
        eps: tolerances.eps,
        f_norm1,
        constraints: KConstraints {
            prev_k,
            three_deg_f: 3.0 * f.degree(),
            q_norm_over_delta: None,
            deg_q: None,
        },
    })
}

/// Largest `2^(-j/8)` not above `v`, so nearby requests share a correction.
fn quantize_down(v: f64) -> f64 {
    let mut j = (-8.0 * v.log2()).ceil();
    loop {
        let q = (-j / 8.0).exp2();
        if q <= v {
            return q;
        }
        j += 1.0;
    }
}

/// Corrections already built in this process, by request.
#[derive(Default)]
pub struct CorrectionCache {
    built: HashMap<(u64, u64, CorrectionStrategy, u64, usize), CorrectionPoly>,
}

impl CorrectionCache {
    pub fn get_or_build(&mut self, req: &CorrectionRequest) -> Result<CorrectionPoly, CorrectionError> {
        let key = (
            req.eps.to_bits(),
            req.delta.to_bits(),
            req.strategy,
            req.degree_budget,
            req.oversample,
        );
        if let Some(p) = self.built.get(&key) {
            return Ok(p.clone());
        }
        let p = build_correction(req)?;
        self.built.insert(key, p.clone());
        Ok(p)
    }
}

/// Quantitative checks of one block, each next to the bound it is held to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockChecks {
    /// Every frequency of `A_N` is `lambda(n)` for some `n` in `I(k_N)`.
    pub spec_inside_block: bool,
    pub h_has_zero_block: bool,
    /// Grid measure on `[-N pi, N pi]` of `|Q_N(l x) - 1| >= delta_N`.
    pub h_minus_f_bad_measure: GridMeasure,
    /// `L eps_N` on `[-L pi, L pi]`: `Q_N(l x)` runs through `L l` periods, each
    /// with bad set below `eps_N / l`.
    pub h_minus_f_bad_measure_bound: f64,
    pub a_minus_h_sup: f64,
    /// `||H||_1 * jitter * L pi`, `L pi` being the largest `|x|` on the stage grid.
    pub a_minus_h_bound: f64,
    /// Largest `|r(s l + q) - sigma(q)|` over the block.
    pub max_offset_deviation: f64,
    pub a_coeff_norm1: f64,
    pub h_coeff_norm1: f64,
    pub factor_norm_product: f64,
    /// `k_N ||F_N||_1 delta_N`.
    pub a_coeff_norm1_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageBlock {
    pub parameters: StageParameters,
    pub q: CorrectionPoly,
    pub k: i64,
    pub witness: BlockWitness,
    pub a: TrigPoly,
    pub checks: BlockChecks,
}

/// Convergence quantities tracked on the fixed window `[-W pi, W pi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub window_pi: f64,
    pub threshold: f64,
    /// Grid measure of `|f - S_N| > threshold` on the window.
    pub residual_bad_measure: GridMeasure,
    pub a_majorant_sup: f64,
    pub residual_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: u32,
    pub tolerances: StageTolerances,
    pub f: TrigPoly,
    pub fit: FitReport,
    /// `None` for a stage whose fit is empty.
    pub block: Option<StageBlock>,
    pub window: WindowDiagnostics,
}

impl StageRecord {
    pub fn a(&self) -> TrigPoly {
        self.block.as_ref().map_or_else(TrigPoly::zero, |b| b.a.clone())
    }

    /// `H_N = Q_N(l x) F_N(x)`, rebuilt from the stored factors.
    pub fn h(&self) -> Option<BlockProduct> {
        let b = self.block.as_ref()?;
        special_product(&b.q.poly, &self.f, b.witness.l).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationState {
    pub spectrum: PerturbedSpectrum,
    pub profile: ShiftProfile,
    pub target: Target,
    pub stages: Vec<StageRecord>,
    #[serde(with = "coefficient_list")]
    pub coeffs: BTreeMap<i64, Complex64>,
}

mod coefficient_list {
    use std::collections::BTreeMap;

    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Coefficient {
        n: i64,
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<i64, Complex64>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<Coefficient> = map.iter().map(|(&n, c)| Coefficient { n, re: c.re, im: c.im }).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i64, Complex64>, D::Error> {
        let list = Vec::<Coefficient>::deserialize(d)?;
        Ok(list.into_iter().map(|c| (c.n, Complex64::new(c.re, c.im))).collect())
    }
}

fn evaluate_on(poly: &TrigPoly, grid: &GridFunction) -> Vec<Complex64> {
    poly.evaluate_many(&grid.points())
}

impl RepresentationState {
    pub fn new(seed: u64, law: HalfWidthLaw, profile: ShiftProfile, target: Target) -> Result<Self, StageError> {
        profile.validate().map_err(|e| StageError::Config(e.to_string()))?;
        let spectrum = PerturbedSpectrum::new(seed, law).map_err(|e| StageError::Config(e.to_string()))?;
        Ok(RepresentationState {
            spectrum,
            profile,
            target,
            stages: Vec::new(),
            coeffs: BTreeMap::new(),
        })
    }

    pub fn completed(&self) -> u32 {
        self.stages.len() as u32
    }

    /// `S_N = A_1 + ... + A_N`.
    pub fn partial_sum(&self, n: u32) -> TrigPoly {
        let terms: Vec<Term> = self
            .stages
            .iter()
            .take(n as usize)
            .filter_map(|s| s.block.as_ref())
            .flat_map(|b| b.a.terms().iter().copied())
            .collect();
        TrigPoly::from_terms(terms).expect("blocks have disjoint spectra")
    }

    /// `S_N` sampled on a grid.
    pub fn evaluate_s(&self, n: u32, half_length_pi: f64, step_pi: f64) -> Result<GridFunction, FitError> {
        let n = n.min(self.completed());
        let grid = GridFunction::sample(half_length_pi, step_pi, |_| Complex64::new(0.0, 0.0))?;
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for stage in self.stages.iter().take(n as usize) {
            if let Some(b) = &stage.block {
                for (v, a) in values.iter_mut().zip(evaluate_on(&b.a, &grid)) {
                    *v += a;
                }
            }
        }
        GridFunction::new(half_length_pi, step_pi, values)
    }

    /// All nonzero `c(n)` with their frequencies `lambda(n)`, as polynomial JSON.
    pub fn export_coefficients(&self) -> String {
        self.partial_sum(self.completed()).to_json()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn prev_k(&self) -> i64 {
        self.stages
            .iter()
            .rev()
            .find_map(|s| s.block.as_ref().map(|b| b.k))
            .unwrap_or(0)
    }

    fn window_diagnostics(
        &self,
        config: &RunConfig,
        tolerances: &StageTolerances,
        a: &TrigPoly,
    ) -> Result<WindowDiagnostics, FitError> {
        let window = self.target.sample(config.window_pi, tolerances.step_pi)?;
        let s = self.evaluate_s(self.completed(), config.window_pi, tolerances.step_pi)?;
        let a_values = evaluate_on(a, &window);
        let after = GridFunction::new(
            config.window_pi,
            tolerances.step_pi,
            s.samples().iter().zip(&a_values).map(|(v, a)| v + a).collect(),
        )?;
        let r = window.difference(&after)?;
        let a_majorant_sup = a.majorant_many(&window.points()).into_iter().fold(0.0f64, f64::max);
        Ok(WindowDiagnostics {
            window_pi: config.window_pi,
            threshold: config.residual_threshold,
            residual_bad_measure: r.exceedance(config.residual_threshold),
            a_majorant_sup,
            residual_sup: r.sup_norm(),
        })
    }

    /// Runs stage `N = completed + 1`. On error the state is left unchanged.
    pub fn run_stage(&mut self, config: &RunConfig, cache: &mut CorrectionCache) -> Result<&StageRecord, StageError> {
        config.schedule.validate().map_err(StageError::Config)?;
        let n = self.completed() + 1;
        let tol = config.schedule.stage(n);
        let fit_err = |source| StageError::Fit { stage: n, source };
        let poly_err = |source| StageError::Poly { stage: n, source };

        let target = self.target.sample(tol.half_length_pi, tol.step_pi).map_err(fit_err)?;
        let s_prev = self.partial_sum(n - 1);
        let r = residual(&target, &s_prev);
        let fit_target = match config.horizon_pi {
            Some(h) if h > tol.half_length_pi => r.zero_extend(h).map_err(fit_err)?,
            _ => r,
        };
        let fit = fit_in_measure(
            &fit_target,
            &FitRequest {
                threshold: tol.eta,
                measure_budget: tol.mu,
                profile: self.profile.clone(),
                max_degree: tol.max_degree + config.fit_degree_slack,
                refine: config.refine_fits,
            },
        )
        .map_err(fit_err)?;

        let Some(mut params) = choose_parameters(&fit.poly, &tol, self.prev_k()) else {
            let window = self
                .window_diagnostics(config, &tol, &TrigPoly::zero())
                .map_err(fit_err)?;
            self.stages.push(StageRecord {
                n,
                tolerances: tol,
                f: fit.poly,
                fit: fit.report,
                block: None,
                window,
            });
            return Ok(self.stages.last().expect("just pushed"));
        };
        params.delta = quantize_down(params.delta);
        params.eps = quantize_down(params.eps);

        let mut req = CorrectionRequest::new(params.eps, params.delta, config.strategy, config.degree_budget);
        req.oversample = config.oversample;
        let q = cache
            .get_or_build(&req)
            .map_err(|source| StageError::Correction { stage: n, source })?;
        let q_norms = q.poly.coeff_norms();
        params.constraints.q_norm_over_delta = Some(q_norms.l1 / params.delta);
        params.constraints.deg_q = Some(q.poly.degree());
        let k = params.constraints.resolve();

        let mut spectrum = self.spectrum.clone();
        let mut l = (2 * k).max(spectrum.witness_reach().saturating_add(k));
        // An odd step spreads `l x_j` over all residues of the dyadic grid.
        if l % 2 == 0 {
            l += 1;
        }
        if block_reach(k, l).saturating_add(1) > MAX_INTEGER_PART {
            return Err(StageError::FrequencyOverflow { stage: n, k, l });
        }
        let witness_err = |source| StageError::Witness { stage: n, source };
        let witness = match config.witness {
            WitnessMode::Plant { jitter } => spectrum.plant_witness(k, l, &self.profile, jitter),
            WitnessMode::Scan { span } => spectrum.adopt_scanned_witness(k, l, l.saturating_add(span), &self.profile),
        }
        .map_err(witness_err)?;
        let l = witness.l;
        if block_reach(k, l).saturating_add(1) > MAX_INTEGER_PART {
            return Err(StageError::FrequencyOverflow { stage: n, k, l });
        }

        let h = special_product(&q.poly, &fit.poly, l).map_err(poly_err)?;
        let carrier_q: Vec<i64> = fit
            .poly
            .terms()
            .iter()
            .map(|t| self.profile.index_of(t.freq).expect("fit frequencies come from the profile"))
            .collect();
        let mut a_terms = Vec::with_capacity(h.product().len());
        let mut spec_inside_block = true;
        let mut max_offset_deviation = 0.0f64;
        for (s, i, _, coeff) in h.blocks() {
            let qi = carrier_q[i];
            let index = s * l + qi;
            spec_inside_block &= witness.locate(index) == Some((s, qi));
            let r = spectrum.offset(index);
            max_offset_deviation = max_offset_deviation.max((r - self.profile.shift(qi)).abs());
            a_terms.push(Term {
                freq: spectrum.lambda(index),
                coeff,
            });
        }
        let a = TrigPoly::from_terms(a_terms).map_err(poly_err)?;

        let points = target.points();
        let a_values = a.evaluate_many(&points);
        let h_values = h.product().evaluate_many(&points);
        let a_minus_h_sup = a_values
            .iter()
            .zip(&h_values)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        let modulated = q.poly.contract(l).map_err(poly_err)?;
        let q_minus_one = GridFunction::new(
            tol.half_length_pi,
            tol.step_pi,
            modulated
                .evaluate_many(&points)
                .into_iter()
                .map(|v| v - 1.0)
                .collect(),
        )
        .map_err(fit_err)?;
        let h_norm1 = h.norm1();
        let jitter = witness.jitter;
        let checks = BlockChecks {
            spec_inside_block,
            h_has_zero_block: h.blocks().any(|(s, ..)| s == 0),
            h_minus_f_bad_measure: exceedance_at_least(&q_minus_one, params.delta),
            h_minus_f_bad_measure_bound: tol.half_length_pi * params.eps,
            a_minus_h_sup,
            a_minus_h_bound: h_norm1 * jitter * tol.half_length_pi * std::f64::consts::PI,
            max_offset_deviation,
            a_coeff_norm1: a.coeff_norms().l1,
            h_coeff_norm1: h_norm1,
            factor_norm_product: h.factor_norm_product(),
            a_coeff_norm1_bound: k as f64 * params.f_norm1 * params.delta,
        };
        let window = self.window_diagnostics(config, &tol, &a).map_err(fit_err)?;

        // Commit.
        self.spectrum = spectrum;
        for t in a.terms() {
            self.coeffs.insert(t.freq.integer_part(), t.coeff);
        }
        self.stages.push(StageRecord {
            n,
            tolerances: tol,
            f: fit.poly,
            fit: fit.report,
            block: Some(StageBlock {
                parameters: params,
                q,
                k,
                witness,
                a,
                checks,
            }),
            window,
        });
        Ok(self.stages.last().expect("just pushed"))
    }
}

/// Grid measure of `|g| >= threshold`.
fn exceedance_at_least(g: &GridFunction, threshold: f64) -> GridMeasure {
    let below = threshold * (1.0 - f64::EPSILON);
    g.exceedance(below)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(target: Target) -> RepresentationState {
        RepresentationState::new(11, HalfWidthLaw::Constant { d: 0.5 }, ShiftProfile::Default, target).unwrap()
    }

    fn small_config() -> RunConfig {
        RunConfig {
            schedule: Schedule {
                name: "test".into(),
                eta0: 0.25,
                eta_power: 1.0,
                mu0: 0.5,
                mu_power: 0.0,
                eps0: 2.0,
                eps_power: 0.0,
                delta0: 0.5,
                delta_power: 0.0,
                degree_per_stage: 4,
                grow_interval: true,
            },
            witness: WitnessMode::Plant { jitter: 1e-9 },
            strategy: CorrectionStrategy::Analytic,
            degree_budget: 5000,
            oversample: 4,
            window_pi: 1.0,
            fit_degree_slack: 0,
            horizon_pi: None,
            residual_threshold: 0.25,
            refine_fits: false,
        }
    }

    #[test]
    fn constraints_resolve_strictly_above() {
        let c = KConstraints {
            prev_k: 10,
            three_deg_f: 12.0,
            q_norm_over_delta: Some(30.5),
            deg_q: Some(31.0),
        };
        assert_eq!(c.resolve(), 32);
        let c = KConstraints {
            prev_k: 40,
            three_deg_f: 0.0,
            q_norm_over_delta: None,
            deg_q: None,
        };
        assert_eq!(c.resolve(), 41);
    }

    #[test]
    fn parameters_follow_the_power_schedule() {
        let f = TrigPoly::from_terms([
            Term {
                freq: ShiftProfile::Default.shifted_frequency(1).unwrap(),
                coeff: Complex64::new(1.5, 0.0),
            },
            Term {
                freq: ShiftProfile::Default.shifted_frequency(-2).unwrap(),
                coeff: Complex64::new(0.0, -0.5),
            },
        ])
        .unwrap();
        let p = choose_parameters(&f, &Schedule::paper().stage(2), 7).unwrap();
        assert_eq!(p.delta, 1.0 / 32.0);
        assert_eq!(p.eps, 1.0 / 8.0);
        assert!(p.constraints.resolve() > 7);
        assert!(choose_parameters(&TrigPoly::zero(), &Schedule::paper().stage(2), 7).is_none());
    }

    #[test]
    fn quantization_rounds_down() {
        for v in [0.5, 0.3, 0.0123, 1.0, 0.999] {
            let q = quantize_down(v);
            assert!(q <= v && q > v * 0.5f64.powf(1.0 / 8.0) * 0.999_999, "{v} -> {q}");
        }
        assert_eq!(quantize_down(0.5), 0.5);
    }

    #[test]
    fn zero_target_is_a_sequence_of_no_ops() {
        let mut s = state(Target::Zero);
        let mut cache = CorrectionCache::default();
        for _ in 0..3 {
            let rec = s.run_stage(&small_config(), &mut cache).unwrap();
            assert!(rec.block.is_none());
        }
        assert!(s.coeffs.is_empty());
        assert_eq!(s.export_coefficients(), TrigPoly::zero().to_json());
    }

    #[test]
    fn single_exponential_stage_one() {
        let mut s = state(Target::preset("single-exponential").unwrap());
        let mut cache = CorrectionCache::default();
        let rec = s.run_stage(&small_config(), &mut cache).unwrap().clone();
        let b = rec.block.as_ref().unwrap();
        assert!(b.checks.spec_inside_block);
        for t in b.a.terms() {
            let n = t.freq.integer_part();
            assert!(b.witness.locate(n).is_some());
            assert_eq!(t.freq, s.spectrum.lambda(n));
        }
        assert_eq!(b.checks.a_coeff_norm1, b.checks.factor_norm_product);
        assert_eq!(b.checks.h_coeff_norm1, b.checks.factor_norm_product);
        assert!(b.checks.a_coeff_norm1 < b.checks.a_coeff_norm1_bound);
        assert!(b.checks.a_minus_h_sup <= b.checks.a_minus_h_bound);
        assert!(!b.checks.h_has_zero_block);
        // Transplanting keeps the multiset of coefficients.
        let h = rec.h().unwrap();
        let mut hc: Vec<_> = h.product().terms().iter().map(|t| (t.coeff.re, t.coeff.im)).collect();
        let mut ac: Vec<_> = b.a.terms().iter().map(|t| (t.coeff.re, t.coeff.im)).collect();
        hc.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ac.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(hc, ac);
    }

    #[test]
    fn partial_sums_and_round_trip() {
        let mut s = state(Target::Step);
        let mut cache = CorrectionCache::default();
        let mut cfg = small_config();
        // A budget this loose lets the second fit ignore the first stage's spikes.
        cfg.schedule.mu0 = 2.0;
        cfg.schedule.grow_interval = false;
        s.run_stage(&cfg, &mut cache).unwrap();
        s.run_stage(&cfg, &mut cache).unwrap();
        let s0 = s.evaluate_s(0, 1.0, 1.0 / 16.0).unwrap();
        assert!(s0.samples().iter().all(|v| v.norm() == 0.0));
        let s1 = s.evaluate_s(1, 1.0, 1.0 / 16.0).unwrap();
        let s2 = s.evaluate_s(2, 1.0, 1.0 / 16.0).unwrap();
        let a2 = s.stages[1].a();
        for j in 0..s1.len() {
            let d = s2.samples()[j] - s1.samples()[j] - a2.evaluate(s1.x(j));
            assert!(d.norm() < 1e-9);
        }
        let back = RepresentationState::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let exported = TrigPoly::from_json(&s.export_coefficients()).unwrap();
        assert_eq!(exported.len(), s.coeffs.len());
        let first = s.stages[0].a();
        let second = s.stages[1].a();
        assert!(first
            .terms()
            .iter()
            .all(|t| second.coefficient(t.freq) == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn failed_stage_leaves_state_untouched() {
        let mut s = state(Target::Step);
        let mut cache = CorrectionCache::default();
        let mut cfg = small_config();
        cfg.degree_budget = 4;
        let before = s.clone();
        assert!(matches!(
            s.run_stage(&cfg, &mut cache),
            Err(StageError::Correction { stage: 1, .. })
        ));
        assert_eq!(s, before);
    }
}

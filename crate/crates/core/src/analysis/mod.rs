//! Diagnostics over finished runs: exceedance measures, the special-product
//! majorant bound, symmetric partial sums, and the smoothing obstruction for
//! spectra that hug the integers too closely.

mod obstruction;
mod stage;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use obstruction::{
    delta_multiplier, delta_multiplier_modulus, minimal_smoothing_order, smoothing_obstruction, tail_bound, tail_sum,
    ObstructionReport, ObstructionRow, TAIL_START,
};
pub use stage::{verify_stage, StageVerification};

use crate::approximator::{FitError, GridFunction, GridMeasure};
use crate::correction::periodic_point;
use crate::representer::RepresentationState;
use crate::trigpoly::{BlockProduct, Term, TrigPoly};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("grids differ")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Grid(#[from] FitError),
    #[error("io: {0}")]
    Io(String),
}

/// Grid measure of `{x : |g(x) - h(x)| > threshold}`.
pub fn measure_exceedance(g: &GridFunction, h: &GridFunction, threshold: f64) -> Result<GridMeasure, AnalysisError> {
    if !g.same_grid(h) {
        return Err(AnalysisError::GridMismatch);
    }
    Ok(g.difference(h)?.exceedance(threshold))
}

/// Worst case of `H*(x) <= |P(x)| sup Q* + 2 P*(x) ||Q||_inf` over a set of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialProductCheck {
    /// `sup Q*`, over a fine periodic grid and the points `l x mod 2 pi`.
    pub q_star_sup: f64,
    pub q_coeff_inf: f64,
    /// Smallest `rhs - lhs` seen.
    pub min_slack: f64,
    pub worst_x: f64,
    pub points: usize,
}

/// Checks the majorant bound for `H = Q(l x) P(x)` at `xs`.
pub fn check_special_product_bound(b: &BlockProduct, xs: &[f64]) -> SpecialProductCheck {
    let q = b.modulator();
    let p = b.carrier();
    let h = b.product();
    let degree = q.degree().round() as usize;
    let n = (16 * (degree + 1)).max(1024);
    let mut probes: Vec<f64> = (0..n).map(|j| periodic_point(j, n)).collect();
    let l = b.step() as f64;
    probes.extend(xs.iter().map(|&x| (l * x).rem_euclid(std::f64::consts::TAU)));
    let q_star_sup = q.majorant_many(&probes).into_iter().fold(0.0f64, f64::max);
    let q_coeff_inf = q.coeff_norms().linf;

    let lhs = h.majorant_many(xs);
    let p_star = p.majorant_many(xs);
    let p_values = p.evaluate_many(xs);
    let (mut min_slack, mut worst_x) = (f64::INFINITY, f64::NAN);
    for (j, &x) in xs.iter().enumerate() {
        let rhs = p_values[j].norm() * q_star_sup + 2.0 * p_star[j] * q_coeff_inf;
        let slack = rhs - lhs[j];
        if slack < min_slack {
            min_slack = slack;
            worst_x = x;
        }
    }
    SpecialProductCheck {
        q_star_sup,
        q_coeff_inf,
        min_slack,
        worst_x,
        points: xs.len(),
    }
}

/// Range `[lo, hi]` of `|lambda|` over the spectrum of `a`.
pub fn block_span(a: &TrigPoly) -> Option<(f64, f64)> {
    a.terms().iter().fold(None, |acc, t| {
        let v = t.freq.abs_value();
        Some(acc.map_or((v, v), |(lo, hi): (f64, f64)| (lo.min(v), hi.max(v))))
    })
}

/// Deviation of symmetric partial sums from the stage partial sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricRow {
    pub n: u32,
    pub span: Option<(f64, f64)>,
    /// Cutoffs that split block `N`.
    pub inside_cutoffs: usize,
    /// `sup |S_X - S_{N-1}|` over those cutoffs and the grid.
    pub inside_sup_dev: f64,
    /// `sup A_N*` over the grid, the bound for `inside_sup_dev`.
    pub majorant_sup: f64,
    /// Cutoffs above block `N` and below the next block.
    pub between_cutoffs: usize,
    /// `sup |S_X - S_N|` over those cutoffs; zero when coefficients are
    /// confined to the blocks.
    pub between_dev: f64,
}

/// Cutoffs `per_block` inside each block, one in every gap, one below the
/// first block and one past the last.
pub fn default_cutoffs(state: &RepresentationState, per_block: usize) -> Vec<f64> {
    let spans: Vec<(f64, f64)> = state.stages.iter().filter_map(|s| block_span(&s.a())).collect();
    let mut cutoffs = Vec::new();
    let mut below = 0.0;
    for &(lo, hi) in &spans {
        cutoffs.push(0.5 * (below + lo));
        for i in 1..=per_block {
            cutoffs.push(lo + (hi - lo) * i as f64 / per_block as f64);
        }
        below = hi;
    }
    cutoffs.push(2.0 * below + 1.0);
    cutoffs.sort_by(f64::total_cmp);
    cutoffs.dedup();
    cutoffs
}

fn below_cutoff(terms: &[Term], x_cut: f64) -> TrigPoly {
    TrigPoly::from_terms(terms.iter().copied().filter(|t| t.freq.abs_value() < x_cut)).expect("distinct frequencies")
}

/// `S_X(x) = sum_{|lambda(n)| < X} c(n) e^{i lambda(n) x}` against the stage
/// sums, for every stage with a block.
///
/// `S_X` is assembled from the coefficient map, independently of the stage
/// records. Between blocks it must be the same polynomial as `S_N`; when the
/// coefficient lists agree the evaluations agree bit for bit, so the deviation
/// is only computed pointwise when they do not.
pub fn symmetric_convergence(
    state: &RepresentationState,
    cutoffs: &[f64],
    xs: &[f64],
) -> Result<Vec<SymmetricRow>, AnalysisError> {
    if cutoffs.iter().any(|c| !(c.is_finite() && *c > 0.0)) || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::InvalidParameter("cutoffs must be positive and increasing".into()));
    }
    let mut global: Vec<Term> = state
        .coeffs
        .iter()
        .map(|(&n, &coeff)| Term {
            freq: state.spectrum.lambda(n),
            coeff,
        })
        .collect();
    global.sort_by(|a, b| a.freq.abs_value().total_cmp(&b.freq.abs_value()).then(a.freq.cmp(&b.freq)));

    let mut rows = Vec::new();
    let mut prev_hi = -1.0;
    let stages: Vec<_> = state.stages.iter().filter(|s| s.block.is_some()).collect();
    for (idx, stage) in stages.iter().enumerate() {
        let a = stage.a();
        let (lo, hi) = block_span(&a).expect("blocks are nonempty");
        let next_lo = stages.get(idx + 1).and_then(|s| block_span(&s.a())).map_or(f64::INFINITY, |s| s.0);
        let inside: Vec<f64> = cutoffs.iter().copied().filter(|&c| lo < c && c <= hi).collect();
        let between: Vec<f64> = cutoffs.iter().copied().filter(|&c| hi < c && c <= next_lo).collect();

        // Terms of the map past the previous block, in |lambda| order.
        let local: Vec<Term> = global
            .iter()
            .copied()
            .filter(|t| t.freq.abs_value() > prev_hi && t.freq.abs_value() <= hi)
            .collect();
        let inside_sup_dev = if inside.is_empty() {
            0.0
        } else {
            use rayon::prelude::*;
            xs.par_iter()
                .map(|&x| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut worst = 0.0f64;
                    let mut next = 0;
                    for t in &local {
                        while next < inside.len() && t.freq.abs_value() >= inside[next] {
                            worst = worst.max(acc.norm());
                            next += 1;
                        }
                        acc += t.coeff * crate::trigpoly::phase::unit_phasor(t.freq, x);
                    }
                    if next < inside.len() {
                        worst = worst.max(acc.norm());
                    }
                    worst
                })
                .reduce(|| 0.0, f64::max)
        };

        let s_n = state.partial_sum(stage.n);
        let mut between_dev = 0.0f64;
        for &c in &between {
            let s_x = below_cutoff(&global, c);
            if s_x != s_n {
                let d = s_x.sub(&s_n);
                between_dev = d.evaluate_many(xs).into_iter().fold(between_dev, |m, v| m.max(v.norm()));
                if between_dev == 0.0 {
                    // Different coefficient lists that happen to agree on the grid.
                    between_dev = f64::MIN_POSITIVE;
                }
            }
        }
        let majorant_sup = a.majorant_many(xs).into_iter().fold(0.0f64, f64::max);
        rows.push(SymmetricRow {
            n: stage.n,
            span: Some((lo, hi)),
            inside_cutoffs: inside.len(),
            inside_sup_dev,
            majorant_sup,
            between_cutoffs: between.len(),
            between_dev,
        });
        prev_hi = hi;
    }
    Ok(rows)
}

/// Grid and level on which a trace is recomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceGrid {
    pub window_pi: f64,
    pub step_pi: f64,
    pub threshold: f64,
}

impl TraceGrid {
    /// The window and threshold the run recorded, on the finest stage step.
    pub fn from_state(state: &RepresentationState) -> Option<TraceGrid> {
        let first = state.stages.first()?;
        let step_pi = state
            .stages
            .iter()
            .map(|s| s.tolerances.step_pi)
            .fold(f64::INFINITY, f64::min);
        Some(TraceGrid {
            window_pi: first.window.window_pi,
            step_pi,
            threshold: first.window.threshold,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u32,
    /// `m{|f - S_N| > tau}` on the window, after stage `N`.
    pub bad_measure_rn: f64,
    pub bad_measure_uncertainty: f64,
    pub a_majorant_sup: f64,
    pub sym_sup_dev: f64,
    pub between_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub grid: TraceGrid,
    /// `m{|f| > tau}`, the measure before any stage.
    pub initial_bad_measure: f64,
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    /// Recomputes every quantity from the coefficients and the target.
    pub fn compute(state: &RepresentationState, grid: &TraceGrid, per_block: usize) -> Result<Self, AnalysisError> {
        let target = state.target.sample(grid.window_pi, grid.step_pi)?;
        let zero = target.map(|_, _| Complex64::new(0.0, 0.0));
        let initial_bad_measure = measure_exceedance(&target, &zero, grid.threshold)?.measure;
        let xs = target.points();
        let symmetric = symmetric_convergence(state, &default_cutoffs(state, per_block), &xs)?;
        let mut rows = Vec::new();
        for stage in &state.stages {
            let s = state.evaluate_s(stage.n, grid.window_pi, grid.step_pi)?;
            let m = measure_exceedance(&target, &s, grid.threshold)?;
            let sym = symmetric.iter().find(|r| r.n == stage.n);
            rows.push(TraceRow {
                n: stage.n,
                bad_measure_rn: m.measure,
                bad_measure_uncertainty: m.uncertainty,
                a_majorant_sup: sym.map_or(0.0, |r| r.majorant_sup),
                sym_sup_dev: sym.map_or(0.0, |r| r.inside_sup_dev),
                between_dev: sym.map_or(0.0, |r| r.between_dev),
            });
        }
        Ok(ConvergenceTrace {
            grid: grid.clone(),
            initial_bad_measure,
            rows,
        })
    }

    /// Stage numbers at which the bad measure failed to drop strictly.
    pub fn measure_increases(&self) -> Vec<u32> {
        let mut previous = self.initial_bad_measure;
        let mut out = Vec::new();
        for r in &self.rows {
            if r.bad_measure_rn >= previous {
                out.push(r.n);
            }
            previous = r.bad_measure_rn;
        }
        out
    }

    /// Stage numbers from 3 on at which `sup A_N*` failed to drop strictly.
    pub fn majorant_increases(&self) -> Vec<u32> {
        self.rows
            .windows(2)
            .filter(|w| w[0].n >= 2 && w[1].a_majorant_sup >= w[0].a_majorant_sup)
            .map(|w| w[1].n)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let io = |e: csv::Error| AnalysisError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n",
            "bad_measure_rn",
            "bad_measure_uncertainty",
            "a_majorant_sup",
            "sym_sup_dev",
            "between_dev",
        ])
        .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:e}", r.bad_measure_rn),
                format!("{:e}", r.bad_measure_uncertainty),
                format!("{:e}", r.a_majorant_sup),
                format!("{:e}", r.sym_sup_dev),
                format!("{:e}", r.between_dev),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| AnalysisError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::correction::CorrectionStrategy;
    use crate::representer::{CorrectionCache, RunConfig, Schedule, Target, WitnessMode};
    use crate::spectrum::{HalfWidthLaw, ShiftProfile};
    use crate::trigpoly::{special_product, Frequency};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exceedance_of_identical_and_shifted_grids() {
        let g = GridFunction::sample(1.0, 1.0 / 32.0, |x| c(x.sin(), 0.0)).unwrap();
        assert_eq!(measure_exceedance(&g, &g, 0.1).unwrap().measure, 0.0);
        let h = g.map(|_, v| v + 0.2);
        let m = measure_exceedance(&g, &h, 0.1).unwrap();
        assert_eq!(m.count, g.len());
        assert_eq!(m.measure, g.step() * g.len() as f64);
        let other = GridFunction::sample(1.0, 1.0 / 16.0, |_| c(0.0, 0.0)).unwrap();
        assert!(matches!(measure_exceedance(&g, &other, 0.1), Err(AnalysisError::GridMismatch)));
    }

    #[test]
    fn exceedance_agrees_with_a_finer_recount() {
        let f = |x: f64| c((3.0 * x).sin() + 0.5 * (7.0 * x).cos(), 0.0);
        let zero = |_: f64| c(0.0, 0.0);
        let coarse = measure_exceedance(
            &GridFunction::sample(1.0, 1.0 / 64.0, f).unwrap(),
            &GridFunction::sample(1.0, 1.0 / 64.0, zero).unwrap(),
            0.7,
        )
        .unwrap();
        let fine = measure_exceedance(
            &GridFunction::sample(1.0, 1.0 / 1024.0, f).unwrap(),
            &GridFunction::sample(1.0, 1.0 / 1024.0, zero).unwrap(),
            0.7,
        )
        .unwrap();
        assert!((coarse.measure - fine.measure).abs() <= coarse.uncertainty + fine.uncertainty);
    }

    #[test]
    fn exceedance_is_monotone_in_the_threshold() {
        let g = GridFunction::sample(1.0, 1.0 / 64.0, |x| c(x.cos(), x.sin() / 2.0)).unwrap();
        let zero = g.map(|_, _| c(0.0, 0.0));
        let mut last = f64::INFINITY;
        for t in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.1] {
            let m = measure_exceedance(&g, &zero, t).unwrap().measure;
            assert!(m <= last);
            last = m;
        }
    }

    #[test]
    fn single_terms_meet_the_bound() {
        let q = TrigPoly::from_terms([Term {
            freq: Frequency::integer(2),
            coeff: c(0.0, 1.5),
        }])
        .unwrap();
        let p = TrigPoly::from_terms([Term {
            freq: Frequency::new(1, 0.125).unwrap(),
            coeff: c(-0.5, 0.25),
        }])
        .unwrap();
        let b = special_product(&q, &p, 5).unwrap();
        let xs: Vec<f64> = (0..50).map(|j| -PI + j as f64 * 0.13).collect();
        let check = check_special_product_bound(&b, &xs);
        // |cQ cP| <= |cP| |cQ| + 2 |cP| |cQ|
        let cq = 1.5;
        let cp = c(-0.5, 0.25).norm();
        assert!((check.min_slack - 2.0 * cp * cq).abs() < 1e-12);
    }

    fn random_poly(rng: &mut ChaCha8Rng, terms: usize, integer: bool, max_freq: i64) -> TrigPoly {
        let mut out = Vec::new();
        for _ in 0..terms {
            let n = rng.random_range(-max_freq..=max_freq);
            let offset = if integer { 0.0 } else { rng.random_range(-0.45..0.45) };
            out.push(Term {
                freq: Frequency::new(n, offset).unwrap(),
                coeff: c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            });
        }
        out.sort_by(|a, b| a.freq.cmp(&b.freq));
        out.dedup_by(|a, b| a.freq == b.freq);
        TrigPoly::from_terms(out).unwrap()
    }

    #[test]
    fn random_products_have_nonnegative_slack() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let q = random_poly(&mut rng, 12, true, 15);
            let p = random_poly(&mut rng, 9, false, 10);
            let l = 2 * p.degree().ceil() as i64 + 1;
            let b = special_product(&q, &p, l).unwrap();
            let xs: Vec<f64> = (0..200).map(|_| rng.random_range(-PI..PI)).collect();
            assert!(check_special_product_bound(&b, &xs).min_slack >= -1e-10);
            // Moving x by 2 pi / l leaves Q(l x) alone, and so sup Q* as well.
            let shifted: Vec<f64> = xs.iter().map(|x| x + 2.0 * PI / l as f64).collect();
            let a = check_special_product_bound(&b, &xs).q_star_sup;
            let s = check_special_product_bound(&b, &shifted).q_star_sup;
            assert!((a - s).abs() < 1e-9 * a.max(1.0));
        }
    }

    fn loose_config() -> RunConfig {
        RunConfig {
            schedule: Schedule {
                name: "test".into(),
                eta0: 0.25,
                eta_power: 1.0,
                mu0: 2.0,
                mu_power: 0.0,
                eps0: 2.0,
                eps_power: 0.0,
                delta0: 0.5,
                delta_power: 0.0,
                degree_per_stage: 4,
                grow_interval: false,
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

    fn two_stage_state() -> RepresentationState {
        let mut s =
            RepresentationState::new(5, HalfWidthLaw::Constant { d: 0.5 }, ShiftProfile::Default, Target::Step).unwrap();
        let mut cache = CorrectionCache::default();
        let cfg = loose_config();
        s.run_stage(&cfg, &mut cache).unwrap();
        s.run_stage(&cfg, &mut cache).unwrap();
        s
    }

    #[test]
    fn empty_state_has_no_rows() {
        let s =
            RepresentationState::new(5, HalfWidthLaw::Constant { d: 0.5 }, ShiftProfile::Default, Target::Zero).unwrap();
        assert!(symmetric_convergence(&s, &[1.0, 10.0], &[0.0, 1.0]).unwrap().is_empty());
        assert!(symmetric_convergence(&s, &[10.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn symmetric_sums_between_blocks_are_exact() {
        let s = two_stage_state();
        let xs: Vec<f64> = (0..33).map(|j| -PI + j as f64 * PI / 16.0).collect();
        let rows = symmetric_convergence(&s, &default_cutoffs(&s, 4), &xs).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.between_dev, 0.0);
            assert!(r.between_cutoffs >= 1);
            assert_eq!(r.inside_cutoffs, 4);
            assert!(r.inside_sup_dev <= r.majorant_sup * (1.0 + 1e-12), "{r:?}");
        }
    }

    #[test]
    fn a_leaked_coefficient_shows_between_blocks() {
        let mut s = two_stage_state();
        let (_, hi) = block_span(&s.stages[0].a()).unwrap();
        let (lo, _) = block_span(&s.stages[1].a()).unwrap();
        let n = ((hi + lo) / 2.0) as i64;
        s.coeffs.insert(n, c(0.5, 0.0));
        let xs = [0.0, 1.0];
        let rows = symmetric_convergence(&s, &default_cutoffs(&s, 2), &xs).unwrap();
        assert!(rows[0].between_dev > 0.0);
    }

    #[test]
    fn stages_recheck_against_their_bounds() {
        let s = two_stage_state();
        for stage in &s.stages {
            let v = verify_stage(&s, stage).unwrap().unwrap();
            assert!(v.spec_inside_block());
            assert!(v.norm_within_bound());
            assert!(v.transplant_within_bound(), "{v:?}");
            assert!(v.special_product.min_slack >= -1e-10);
            let recorded = &stage.block.as_ref().unwrap().checks;
            assert_eq!(v.a_coeff_norm1, recorded.a_coeff_norm1);
        }
    }

    #[test]
    fn trace_has_one_row_per_stage() {
        let s = two_stage_state();
        let grid = TraceGrid::from_state(&s).unwrap();
        let trace = ConvergenceTrace::compute(&s, &grid, 2).unwrap();
        assert_eq!(trace.rows.len(), 2);
        // The step exceeds the level exactly on [0, 1]; the grid count is
        // within one step per endpoint.
        let h = PI * grid.step_pi;
        assert!((trace.initial_bad_measure - 1.0).abs() <= 2.0 * h);
        let csv = trace.to_csv_string();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("n,bad_measure_rn"));
    }
}

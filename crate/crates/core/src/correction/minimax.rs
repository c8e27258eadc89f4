//! Real-valued candidates `P(x) = 2 sum_{j=1}^n (u_j cos jx - v_j sin jx)`
//! found by linear programming on a grid.
//!
//! A reweighted L1 pass locates a small exceptional set, then a second
//! program enforces `|P - 1| <= delta` off that set while pushing down the
//! largest prefix sum, which bounds the windowed majorant.

use std::f64::consts::{PI, TAU};

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome, Solution, Variable};
use num_complex::Complex64;

use super::{min_degree_for, verify_correction, Certificate, CorrectionError, CorrectionPoly, CorrectionRequest, CorrectionStrategy};
use crate::trigpoly::{Frequency, Term, TrigPoly};

const REWEIGHT_ROUNDS: usize = 6;
const REWEIGHT_FLOOR: f64 = 0.05;
const CUT_ROUNDS: usize = 12;
const CUTS_PER_ROUND: usize = 32;
const GRID_FACTOR: usize = 4;

struct Grid {
    xs: Vec<f64>,
    step: f64,
    /// `cos(j x_i)`, `sin(j x_i)` for `j = 1..=n`, row-major by point.
    cos: Vec<f64>,
    sin: Vec<f64>,
    n: usize,
}

impl Grid {
    fn new(n: usize) -> Self {
        let m = GRID_FACTOR * (2 * n + 1);
        let step = TAU / m as f64;
        let xs: Vec<f64> = (0..m).map(|i| -PI + (i as f64 + 0.5) * step).collect();
        let mut cos = Vec::with_capacity(m * n);
        let mut sin = Vec::with_capacity(m * n);
        for &x in &xs {
            for j in 1..=n {
                let (s, c) = (j as f64 * x).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Grid { xs, step, cos, sin, n }
    }

    /// `P(x_i)` as a linear expression.
    fn value_expr(&self, i: usize, u: &[Variable], v: &[Variable]) -> LinearExpr {
        let mut e = LinearExpr::empty();
        for j in 0..self.n {
            e.add(u[j], 2.0 * self.cos[i * self.n + j]);
            e.add(v[j], -2.0 * self.sin[i * self.n + j]);
        }
        e
    }

    fn value(&self, i: usize, coeffs: &[Complex64]) -> f64 {
        (0..self.n)
            .map(|j| 2.0 * (coeffs[j].re * self.cos[i * self.n + j] - coeffs[j].im * self.sin[i * self.n + j]))
            .sum()
    }
}

fn add_octagon(problem: &mut Problem, u: Variable, v: Variable, radius: f64) {
    let r = radius * (PI / 8.0).cos();
    let d = std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in [(d, d), (d, -d)] {
        let mut e = LinearExpr::empty();
        e.add(u, a);
        e.add(v, b);
        problem.add_constraint(e.clone(), ComparisonOp::Le, r);
        problem.add_constraint(e, ComparisonOp::Ge, -r);
    }
}

fn coefficient_vars(problem: &mut Problem, n: usize, radius: f64) -> (Vec<Variable>, Vec<Variable>) {
    let r = radius * (PI / 8.0).cos();
    let u: Vec<Variable> = (0..n).map(|_| problem.add_var(0.0, (-r, r))).collect();
    let v: Vec<Variable> = (0..n).map(|_| problem.add_var(0.0, (-r, r))).collect();
    for j in 0..n {
        add_octagon(problem, u[j], v[j], radius);
    }
    (u, v)
}

fn read_coeffs(sol: &Solution, u: &[Variable], v: &[Variable]) -> Vec<Complex64> {
    u.iter().zip(v).map(|(&a, &b)| Complex64::new(sol.var_value(a), sol.var_value(b))).collect()
}

fn solved(outcome: Result<SolveOutcome, microlp::Error>) -> Result<Option<Solution>, CorrectionError> {
    match outcome {
        Ok(SolveOutcome::Solution(s)) => Ok(Some(s)),
        Ok(SolveOutcome::Interrupted(_)) => Err(CorrectionError::Solver("solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(CorrectionError::Solver(e.to_string())),
    }
}

/// Reweighted L1: returns per-point slack of the final round.
fn locate_exceptional_set(grid: &Grid, delta: f64) -> Result<(Vec<Complex64>, Vec<f64>), CorrectionError> {
    let m = grid.xs.len();
    let mut weights = vec![1.0; m];
    let mut last = None;
    for _ in 0..REWEIGHT_ROUNDS {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let (u, v) = coefficient_vars(&mut problem, grid.n, delta);
        let slack: Vec<Variable> = (0..m).map(|i| problem.add_var(weights[i] * grid.step, (0.0, f64::INFINITY))).collect();
        for i in 0..m {
            let e = grid.value_expr(i, &u, &v);
            let mut upper = e.clone();
            upper.add(slack[i], -1.0);
            problem.add_constraint(upper, ComparisonOp::Le, 1.0 + delta);
            let mut lower = e;
            lower.add(slack[i], 1.0);
            problem.add_constraint(lower, ComparisonOp::Ge, 1.0 - delta);
        }
        let sol = solved(problem.solve())?.ok_or_else(|| CorrectionError::Solver("relaxation infeasible".into()))?;
        let s: Vec<f64> = slack.iter().map(|&x| sol.var_value(x).max(0.0)).collect();
        for i in 0..m {
            weights[i] = 1.0 / (s[i] + REWEIGHT_FLOOR);
        }
        last = Some((read_coeffs(&sol, &u, &v), s));
    }
    Ok(last.expect("at least one round"))
}

/// Term order used for prefix sums: frequencies `-n..-1, 1..n`.
fn ordered_frequency(p: usize, n: usize) -> i64 {
    if p < n {
        -((n - p) as i64)
    } else {
        (p - n + 1) as i64
    }
}

/// Prefix sums `Z_1..Z_2n` at `x`.
fn prefix_sums(coeffs: &[Complex64], x: f64) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut acc = Complex64::new(0.0, 0.0);
    (0..2 * n)
        .map(|p| {
            let f = ordered_frequency(p, n);
            let a = if f > 0 { coeffs[(f - 1) as usize] } else { coeffs[(-f - 1) as usize].conj() };
            acc += a * Complex64::from_polar(1.0, f as f64 * x);
            acc
        })
        .collect()
}

/// Coefficients of `u` and `v` in `Re(exp(-i theta) Z_b(x))`.
fn cut_coefficients(n: usize, b: usize, x: f64, theta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut cu = vec![0.0; n];
    let mut cv = vec![0.0; n];
    for p in 0..=b {
        let f = ordered_frequency(p, n);
        let phi = f as f64 * x - theta;
        let j = (f.unsigned_abs() - 1) as usize;
        cu[j] += phi.cos();
        cv[j] += if f > 0 { -phi.sin() } else { phi.sin() };
    }
    (cu, cv)
}

/// `Re(exp(-i theta) Z_b(x)) - t <= 0`.
fn cut_expr(n: usize, b: usize, x: f64, theta: f64, u: &[Variable], v: &[Variable], t: Variable) -> LinearExpr {
    let (cu, cv) = cut_coefficients(n, b, x, theta);
    let mut e = LinearExpr::empty();
    for j in 0..n {
        e.add(u[j], cu[j]);
        e.add(v[j], cv[j]);
    }
    e.add(t, -1.0);
    e
}

/// Worst prefix sum per grid point, sorted by modulus.
fn worst_prefixes(grid: &Grid, coeffs: &[Complex64]) -> Vec<(f64, usize, usize, f64)> {
    let mut out: Vec<(f64, usize, usize, f64)> = grid
        .xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let z = prefix_sums(coeffs, x);
            let (b, zb) = z
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .map(|(b, zb)| (b, *zb))
                .unwrap();
            (zb.norm(), i, b, zb.arg())
        })
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

fn refine(grid: &Grid, delta: f64, exceptional: &[bool], seed: &[Complex64]) -> Result<Option<Vec<Complex64>>, CorrectionError> {
    let n = grid.n;
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let (u, v) = coefficient_vars(&mut problem, n, delta);
    let t = problem.add_var(1.0, (0.0, f64::INFINITY));
    for (i, &skip) in exceptional.iter().enumerate() {
        if !skip {
            let e = grid.value_expr(i, &u, &v);
            problem.add_constraint(e.clone(), ComparisonOp::Le, 1.0 + delta);
            problem.add_constraint(e, ComparisonOp::Ge, 1.0 - delta);
        }
    }
    for &(_, i, b, theta) in worst_prefixes(grid, seed).iter().take(4 * CUTS_PER_ROUND) {
        problem.add_constraint(cut_expr(n, b, grid.xs[i], theta, &u, &v, t), ComparisonOp::Le, 0.0);
    }
    let Some(mut sol) = solved(problem.solve())? else {
        return Ok(None);
    };
    for _ in 0..CUT_ROUNDS {
        let coeffs = read_coeffs(&sol, &u, &v);
        let level = sol.var_value(t);
        let violated: Vec<_> = worst_prefixes(grid, &coeffs)
            .into_iter()
            .filter(|w| w.0 > level * (1.0 + 1e-3) + 1e-12)
            .take(CUTS_PER_ROUND)
            .collect();
        if violated.is_empty() {
            break;
        }
        for (_, i, b, theta) in violated {
            let expr = cut_expr(n, b, grid.xs[i], theta, &u, &v, t);
            match solved(sol.clone().add_constraint(expr, ComparisonOp::Le, 0.0))? {
                Some(next) => sol = next,
                None => return Ok(Some(read_coeffs(&sol, &u, &v))),
            }
        }
    }
    Ok(Some(read_coeffs(&sol, &u, &v)))
}

fn to_poly(coeffs: &[Complex64]) -> TrigPoly {
    let terms = coeffs.iter().enumerate().flat_map(|(j, &a)| {
        let f = j as i64 + 1;
        [
            Term { freq: Frequency::integer(-f), coeff: a.conj() },
            Term { freq: Frequency::integer(f), coeff: a },
        ]
    });
    TrigPoly::from_terms(terms).expect("finite coefficients")
}

fn attempt(n: usize, delta: f64, eps: f64) -> Result<Option<TrigPoly>, CorrectionError> {
    let grid = Grid::new(n);
    let (relaxed, slack) = locate_exceptional_set(&grid, delta)?;
    let m = grid.xs.len();
    let mut order: Vec<usize> = (0..m).filter(|&i| slack[i] > 1e-9).collect();
    order.sort_by(|&a, &b| slack[b].total_cmp(&slack[a]));
    let cap = (0.9 * eps / grid.step).floor() as usize;
    // Try the relaxation's own support first, then the largest admissible set.
    let mut sizes = vec![order.len().min(cap)];
    if order.len() < cap {
        sizes.push(cap);
    }
    for size in sizes {
        let mut exceptional = vec![false; m];
        if size <= order.len() {
            order.iter().take(size).for_each(|&i| exceptional[i] = true);
        } else {
            // Grow around the worst points by ranking on |P - 1| of the relaxation.
            let mut rank: Vec<usize> = (0..m).collect();
            rank.sort_by(|&a, &b| {
                let da = (grid.value(a, &relaxed) - 1.0).abs();
                let db = (grid.value(b, &relaxed) - 1.0).abs();
                db.total_cmp(&da)
            });
            rank.iter().take(size).for_each(|&i| exceptional[i] = true);
        }
        if let Some(coeffs) = refine(&grid, delta, &exceptional, &relaxed)? {
            return Ok(Some(to_poly(&coeffs)));
        }
    }
    Ok(None)
}

fn degree_ladder(start: u64, budget: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = start;
    while n < budget {
        out.push(n);
        n = (n + n / 4).max(n + 1);
    }
    if start <= budget {
        out.push(budget);
    }
    out
}

pub(super) fn build(req: &CorrectionRequest) -> Result<CorrectionPoly, CorrectionError> {
    let eps_target = req.eps * (1.0 - req.margin);
    let delta_target = req.delta * (1.0 - req.margin);
    let lower = min_degree_for(req.eps, req.delta);
    let start = min_degree_for(eps_target, delta_target).max(lower).max(2);
    let mut best: Option<Box<Certificate>> = None;
    for n in degree_ladder(start, req.degree_budget) {
        // A numerically singular program at one degree is not fatal; the
        // next rung poses a different one.
        let Ok(Some(poly)) = attempt(n as usize, delta_target, eps_target) else {
            continue;
        };
        let certificate = verify_correction(&poly, req.eps, req.delta, req.oversample);
        if certificate.certified {
            return Ok(CorrectionPoly {
                poly,
                certificate,
                strategy: CorrectionStrategy::Minimax,
                construction: format!("linear program, degree {n}"),
            });
        }
        let better = best.as_ref().is_none_or(|b| certificate.bad_measure < b.bad_measure);
        if better {
            best = Some(Box::new(certificate));
        }
    }
    Err(CorrectionError::BudgetExceeded {
        strategy: CorrectionStrategy::Minimax,
        budget: req.degree_budget,
        required_degree: Some(lower),
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cut_coefficients_match_prefix_sum() {
        let coeffs = vec![Complex64::new(0.1, -0.2), Complex64::new(-0.05, 0.15), Complex64::new(0.2, 0.0)];
        let x = 0.7;
        let z = prefix_sums(&coeffs, x);
        for b in 0..6 {
            let theta = 0.3 * b as f64;
            let (cu, cv) = cut_coefficients(3, b, x, theta);
            let value: f64 = (0..3).map(|j| cu[j] * coeffs[j].re + cv[j] * coeffs[j].im).sum();
            let expected = (Complex64::from_polar(1.0, -theta) * z[b]).re;
            assert!((value - expected).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn prefix_sums_end_at_the_real_value() {
        let coeffs = vec![Complex64::new(0.1, -0.2), Complex64::new(-0.05, 0.15)];
        let poly = to_poly(&coeffs);
        let x = -1.3;
        let z = prefix_sums(&coeffs, x);
        assert!((z[3] - poly.evaluate(x)).norm() < 1e-14);
        assert!(z[3].im.abs() < 1e-14);
    }

    #[test]
    fn ladder_ends_at_budget() {
        assert_eq!(degree_ladder(10, 20), vec![10, 12, 15, 18, 20]);
        assert!(degree_ladder(30, 20).is_empty());
    }

    #[test]
    fn infeasible_budget_is_reported_with_the_energy_bound() {
        let req = CorrectionRequest::new(0.5, 0.2, CorrectionStrategy::Minimax, 64);
        match build(&req) {
            Err(CorrectionError::BudgetExceeded { required_degree, best, .. }) => {
                assert_eq!(required_degree, Some(93));
                assert!(best.is_none());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generous_target_is_certified() {
        let req = CorrectionRequest::new(2.5, 0.5, CorrectionStrategy::Minimax, 24);
        let p = build(&req).unwrap();
        assert!(p.certificate.certified, "{:?}", p.certificate);
        let poly = &p.poly;
        for t in poly.terms() {
            let mirror = poly.coefficient(t.freq.neg());
            assert!((mirror - t.coeff.conj()).norm() < 1e-15);
        }
    }
}

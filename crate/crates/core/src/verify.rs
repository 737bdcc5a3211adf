//! Slow, independent checks: a grid search over estimators and a
//! cross-method comparison of the curve.

use rayon::prelude::*;
use serde::Serialize;

use crate::binary::closed_form_curve;
use crate::curve::{curve_by_sweep, curve_by_vertices, PiecewiseLinearDP, SweepOptions};
use crate::error::{DpError, Result};
use crate::matrix::Matrix;
use crate::model::{wasserstein1, Distribution, Problem};
use crate::programs::{solve_dp_at, Form};

/// Largest number of grid points `grid_oracle` will evaluate.
pub const GRID_BUDGET: u128 = 100_000_000;

/// A grid point counts as feasible when its transport cost is within this
/// of the perception level.
const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOracle {
    /// Least expected distortion over the feasible grid points, an upper
    /// bound on `D(P)`.
    pub value: f64,
    /// Declared width `n_y (max d - min d) / steps` of the bracket
    /// `[D(P), D(P) + band]`.
    pub band: f64,
    pub points: u128,
}

/// `n_y (max d - min d) / steps`.
pub fn lipschitz_band(problem: &Problem, steps: usize) -> f64 {
    let d = problem.distortion().matrix();
    problem.n_y() as f64 * (d.max_entry() - d.min_entry()) / steps as f64
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Grid points the oracle would evaluate.
pub fn grid_size(n_x: usize, n_y: usize, steps: usize) -> u128 {
    if n_x == 2 {
        (steps as u128 + 1).saturating_pow(n_y.saturating_sub(1) as u32)
    } else {
        let per_column = binomial((steps + n_x - 1) as u128, (n_x - 1) as u128);
        per_column.saturating_pow(n_y as u32)
    }
}

/// Minimum expected distortion over estimators whose columns lie on the
/// uniform simplex grid with spacing `1 / steps`, among those with
/// `W1(P_X, Q P_Y) <= p_level`.
///
/// For binary sources the column with the largest `p_y` is not gridded but
/// set optimally given the others, which keeps `P = 0` reachable; then the
/// bracket provably holds with width `(max d - min d) / steps`.
pub fn grid_oracle(problem: &Problem, p_level: f64, steps: usize) -> Result<GridOracle> {
    if !p_level.is_finite() || p_level < 0.0 {
        return Err(DpError::InvalidPerception(p_level));
    }
    if steps == 0 {
        return Err(DpError::Unsupported("the grid needs at least one step".into()));
    }
    let (n_x, n_y) = (problem.n_x(), problem.n_y());
    let points = grid_size(n_x, n_y, steps);
    if points > GRID_BUDGET {
        return Err(DpError::BudgetExceeded(format!(
            "{points} grid points exceed the oracle budget of {GRID_BUDGET}"
        )));
    }
    let best = if n_x == 2 {
        binary_grid(problem, p_level, steps, points)?
    } else {
        simplex_grid(problem, p_level, steps, points)?
    };
    let value = best.ok_or(DpError::NoFeasibleGridPoint(p_level))?;
    Ok(GridOracle { value, band: lipschitz_band(problem, steps), points })
}

fn feasible(problem: &Problem, p_x: &Distribution, q: &Matrix, p_level: f64) -> Result<bool> {
    let out = Distribution::new(q.mul_vec(problem.p_y()));
    let Ok(out) = out else { return Ok(false) };
    let (w1, _) = wasserstein1(p_x, &out, problem.metric())?;
    Ok(w1 <= p_level + FEASIBILITY_SLACK)
}

fn min_option(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn binary_grid(problem: &Problem, p_level: f64, steps: usize, points: u128) -> Result<Option<f64>> {
    let n_y = problem.n_y();
    let p_y = problem.p_y();
    let p1 = problem.p_x()[0];
    let rho = problem.rho();
    let t = p_level / problem.metric().matrix()[(0, 1)];
    let anchor = (0..n_y).fold(0, |best, y| if p_y[y] > p_y[best] { y } else { best });
    let free: Vec<usize> = (0..n_y).filter(|&y| y != anchor).collect();
    let p_x = Distribution::new(problem.p_x().to_vec())?;
    let radix = steps as u128 + 1;

    (0..points as u64)
        .into_par_iter()
        .map(|idx| -> Result<Option<f64>> {
            let mut q1 = vec![0.0; n_y];
            let mut rest = idx as u128;
            for &y in &free {
                q1[y] = (rest % radix) as f64 / steps as f64;
                rest /= radix;
            }
            let s: f64 = free.iter().map(|&y| p_y[y] * q1[y]).sum();
            let lo = ((p1 - s - t) / p_y[anchor]).max(0.0);
            let hi = ((p1 - s + t) / p_y[anchor]).min(1.0);
            if lo > hi {
                return Ok(None);
            }
            let gain = rho[(0, anchor)] - rho[(1, anchor)];
            q1[anchor] = if gain <= 0.0 { hi } else { lo };
            let q = Matrix::from_fn(2, n_y, |x, y| if x == 0 { q1[y] } else { 1.0 - q1[y] });
            if !feasible(problem, &p_x, &q, p_level)? {
                return Ok(None);
            }
            Ok(Some(rho.frobenius(&q)))
        })
        .try_reduce(|| None, |a, b| Ok(min_option(a, b)))
}

/// All compositions of `steps` into `n` nonnegative parts, scaled by
/// `1 / steps`.
fn simplex_points(n: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, steps: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left as f64 / steps as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k as f64 / steps as f64);
            rec(n, left - k, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, steps, steps, &mut Vec::with_capacity(n), &mut out);
    out
}

fn simplex_grid(problem: &Problem, p_level: f64, steps: usize, points: u128) -> Result<Option<f64>> {
    let (n_x, n_y) = (problem.n_x(), problem.n_y());
    let columns = simplex_points(n_x, steps);
    let radix = columns.len() as u128;
    let rho = problem.rho();
    let p_x = Distribution::new(problem.p_x().to_vec())?;
    (0..points as u64)
        .into_par_iter()
        .map(|idx| -> Result<Option<f64>> {
            let mut q = Matrix::zeros(n_x, n_y);
            let mut rest = idx as u128;
            for y in 0..n_y {
                let col = &columns[(rest % radix) as usize];
                rest /= radix;
                for x in 0..n_x {
                    q[(x, y)] = col[x];
                }
            }
            if !feasible(problem, &p_x, &q, p_level)? {
                return Ok(None);
            }
            Ok(Some(rho.frobenius(&q)))
        })
        .try_reduce(|| None, |a, b| Ok(min_option(a, b)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    /// Exact methods must agree pairwise within this.
    pub exact_tol: f64,
    /// Grid resolution for binary sources; `None` skips the grid oracle.
    pub grid_steps: Option<usize>,
    /// Grid oracle is skipped above this many points per level.
    pub grid_budget: u128,
    /// Shift every sweep slope by `-1e-3` to exercise the failure path.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            exact_tol: 1e-8,
            grid_steps: Some(200),
            grid_budget: 1_000_000,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub p: f64,
    pub lp: f64,
    pub closed_form: Option<f64>,
    pub vertex: Option<f64>,
    pub sweep: f64,
    pub grid: Option<f64>,
    pub grid_band: Option<f64>,
    /// Largest pairwise difference among the exact methods.
    pub discrepancy: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub instance: String,
    pub methods: Vec<String>,
    /// Methods that could not run, with the reason.
    pub skipped: Vec<String>,
    pub rows: Vec<VerifyRow>,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    /// One line per failed check, naming the level.
    pub failures: Vec<String>,
    pub pass: bool,
}

/// `n` equally spaced levels from 0 to 1.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Runs every applicable method at every level of `p_grid` and compares
/// them. Failures are reported, not returned as errors; only invalid
/// input or a failing pointwise LP is an error.
pub fn cross_verify(problem: &Problem, p_grid: &[f64], opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut methods = vec!["lp".to_string(), "sweep".to_string()];
    let mut skipped = Vec::new();

    let closed = if problem.n_x() == 2 {
        methods.push("closed-form".into());
        Some(closed_form_curve(problem)?)
    } else {
        skipped.push("closed-form: source is not binary".into());
        None
    };
    let vertex = match curve_by_vertices(problem) {
        Ok(rep) => {
            methods.push("vertex".into());
            Some(rep.curve)
        }
        Err(DpError::BudgetExceeded(msg)) => {
            skipped.push(format!("vertex: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    let sweep = curve_by_sweep(problem, &SweepOptions::default())?.curve;
    let sweep_value = |p: f64| {
        let v = sweep.value(p);
        if opts.inject_fault { v + 1e-3 * (1.0 - p).max(0.0) } else { v }
    };
    let grid_steps = match opts.grid_steps {
        Some(s) if problem.n_x() == 2 && grid_size(2, problem.n_y(), s) <= opts.grid_budget => {
            methods.push("grid".into());
            Some(s)
        }
        Some(_) => {
            skipped.push("grid: only run for binary sources within the grid budget".into());
            None
        }
        None => None,
    };

    let mut rows = Vec::with_capacity(p_grid.len());
    let mut failures = Vec::new();
    let mut max_discrepancy: f64 = 0.0;
    for &p in p_grid {
        let lp = solve_dp_at(problem, p, Form::Ot)?.value;
        let eval = |c: &Option<PiecewiseLinearDP>| c.as_ref().map(|c| c.value(p));
        let (cf, vx, sw) = (eval(&closed), eval(&vertex), sweep_value(p));
        let named: Vec<(&str, f64)> = [("lp", Some(lp)), ("closed-form", cf), ("vertex", vx), ("sweep", Some(sw))]
            .into_iter()
            .filter_map(|(n, v)| v.map(|v| (n, v)))
            .collect();
        let mut discrepancy: f64 = 0.0;
        for (i, a) in named.iter().enumerate() {
            for b in &named[i + 1..] {
                let d = (a.1 - b.1).abs();
                discrepancy = discrepancy.max(d);
                if d > opts.exact_tol {
                    failures.push(format!("P = {p}: {} = {} but {} = {} (|diff| = {d:.3e})", a.0, a.1, b.0, b.1));
                }
            }
        }
        let mut pass = discrepancy <= opts.exact_tol;
        let (mut grid, mut grid_band) = (None, None);
        if let Some(steps) = grid_steps {
            let g = grid_oracle(problem, p, steps)?;
            if g.value < lp - 1e-9 || g.value > lp + g.band {
                pass = false;
                failures.push(format!(
                    "P = {p}: grid value {} outside [{lp}, {lp} + {}]",
                    g.value, g.band
                ));
            }
            grid = Some(g.value);
            grid_band = Some(g.band);
        }
        max_discrepancy = max_discrepancy.max(discrepancy);
        rows.push(VerifyRow { p, lp, closed_form: cf, vertex: vx, sweep: sw, grid, grid_band, discrepancy, pass });
    }
    let pass = failures.is_empty();
    Ok(VerifyReport {
        instance: format!("n_x = {}, n_y = {}", problem.n_x(), problem.n_y()),
        methods,
        skipped,
        rows,
        max_discrepancy,
        tolerance: opts.exact_tol,
        failures,
        pass,
    })
}

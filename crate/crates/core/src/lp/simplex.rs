use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::StandardLp;
use crate::error::LpError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Lowest-index entering and leaving variables. Never cycles.
    #[default]
    Bland,
    /// Most negative reduced cost. Faster on average, may cycle; cycling is
    /// detected and reported.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub pivot_rule: PivotRule,
    /// Pivot budget over both phases; `None` means `100 * (m + n)`.
    pub max_iterations: Option<usize>,
    /// Phase-1 objective above this (relative to `max(1, |b|_inf)`) means infeasible.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    /// Tableau entries at or below this are not used as pivots.
    pub pivot_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            pivot_rule: PivotRule::Bland,
            max_iterations: None,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-11,
            pivot_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point. Optimal: a basic optimal solution. Unbounded: the last
    /// basic feasible solution. Infeasible: zeros.
    pub x: Vec<f64>,
    pub value: f64,
    /// Basic structural columns, one per independent row.
    pub basis: Vec<usize>,
    /// Dual multipliers, one per original row (zero on dropped rows).
    pub dual: Vec<f64>,
    /// Improving ray `d >= 0, A d = 0, c^T d < 0` when unbounded.
    pub ray: Option<Vec<f64>>,
    /// Farkas vector `y` with `y^T A <= 0`, `y^T b > 0` when infeasible.
    pub farkas: Option<Vec<f64>>,
    /// Rows found linearly dependent during phase 1 and dropped.
    pub dropped_rows: Vec<usize>,
    pub iterations: usize,
}

pub fn solve(lp: &StandardLp) -> Result<LpSolution, LpError> {
    solve_with(lp, &SimplexOptions::default())
}

pub fn solve_with(lp: &StandardLp, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    lp.check()?;
    let m = lp.n_rows();
    let n = lp.n_vars();
    let budget = opts.max_iterations.unwrap_or(100 * (m + n).max(1));

    // Row signs so that the working right-hand side is nonnegative.
    let sign: Vec<f64> = lp.b.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut tab = Tableau::new(lp, &sign);
    let mut iterations = 0usize;

    // Phase 1: minimize the sum of artificials.
    tab.load_phase_one();
    match tab.run(opts, true, budget, &mut iterations)? {
        Outcome::Optimal => {}
        Outcome::Unbounded(_) => unreachable!("phase-1 objective is bounded below by zero"),
    }
    let b_scale = lp.b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let phase_one_value = -tab.obj[tab.rhs_col()];
    if phase_one_value > opts.feasibility_tol * b_scale {
        let farkas = (0..m)
            .map(|i| sign[i] * (1.0 - tab.obj[n + i]))
            .collect();
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            value: f64::NAN,
            basis: Vec::new(),
            dual: vec![0.0; m],
            ray: None,
            farkas: Some(farkas),
            dropped_rows: Vec::new(),
            iterations,
        });
    }
    let dropped_rows = tab.drive_out_artificials(opts.pivot_tol.max(1e-9));

    // Phase 2 on the original costs; artificial columns stay but never enter.
    tab.load_phase_two(&lp.c);
    let outcome = tab.run(opts, false, budget, &mut iterations)?;

    let mut x = vec![0.0; n];
    for (r, &j) in tab.basis.iter().enumerate() {
        x[j] = tab.t[(r, tab.rhs_col())];
    }
    let mut dual: Vec<f64> = (0..m).map(|i| -sign[i] * tab.obj[n + i]).collect();
    let basis = tab.basis.clone();

    if let Outcome::Unbounded(q) = outcome {
        let mut ray = vec![0.0; n];
        ray[q] = 1.0;
        for (r, &j) in tab.basis.iter().enumerate() {
            ray[j] = -tab.t[(r, q)];
        }
        let value = dot(&lp.c, &x);
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            value,
            basis,
            dual,
            ray: Some(ray),
            farkas: None,
            dropped_rows,
            iterations,
        });
    }

    // Recompute x_B and y from the final basis to shed accumulated pivot error.
    if let Some((xb, y)) = refine(lp, &sign, &tab.row_of, &tab.basis) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (&j, v) in tab.basis.iter().zip(xb) {
            x[j] = v;
        }
        dual = vec![0.0; m];
        for (&i, v) in tab.row_of.iter().zip(y) {
            dual[i] = sign[i] * v;
        }
    }
    let value = dot(&lp.c, &x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
        basis,
        dual,
        ray: None,
        farkas: None,
        dropped_rows,
        iterations,
    })
}

/// Duality diagnostics for an optimal solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCheck {
    /// `|c^T x - y^T b|`.
    pub gap: f64,
    /// `max_j max(0, (y^T A)_j - c_j)`.
    pub dual_violation: f64,
    /// `max_i |(A x - b)_i|`.
    pub primal_residual: f64,
    pub dual_feasible: bool,
}

pub fn dual_check(lp: &StandardLp, sol: &LpSolution) -> Result<DualCheck, LpError> {
    if sol.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal(sol.status));
    }
    dual_check_vectors(lp, &sol.x, &sol.dual)
}

pub(crate) fn dual_check_vectors(lp: &StandardLp, x: &[f64], y: &[f64]) -> Result<DualCheck, LpError> {
    if x.len() != lp.n_vars() || y.len() != lp.n_rows() {
        return Err(LpError::Shape("solution vectors do not match the program".into()));
    }
    let primal = dot(&lp.c, x);
    let dual_obj = dot(y, &lp.b);
    let at_y = lp.a.transpose().mul_vec(y);
    let dual_violation = at_y
        .iter()
        .zip(&lp.c)
        .map(|(ya, c)| (ya - c).max(0.0))
        .fold(0.0, f64::max);
    Ok(DualCheck {
        gap: (primal - dual_obj).abs(),
        dual_violation,
        primal_residual: lp.primal_residual(x),
        dual_feasible: dual_violation <= 1e-9,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

/// Dense tableau over `[A' | I]` where `A'` is `A` with sign-flipped rows.
/// Column `n + i` is the artificial of original row `i`.
struct Tableau {
    n: usize,
    m: usize,
    t: Matrix,
    /// Reduced costs; the last entry holds minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Original row index of each tableau row.
    row_of: Vec<usize>,
}

impl Tableau {
    fn new(lp: &StandardLp, sign: &[f64]) -> Self {
        let (m, n) = (lp.n_rows(), lp.n_vars());
        let width = n + m + 1;
        let mut t = Matrix::zeros(m, width);
        for i in 0..m {
            let s = sign[i];
            let row = t.row_mut(i);
            for (dst, &a) in row[..n].iter_mut().zip(lp.a.row(i)) {
                *dst = s * a;
            }
            row[n + i] = 1.0;
            row[width - 1] = s * lp.b[i];
        }
        Self {
            n,
            m,
            t,
            obj: vec![0.0; width],
            basis: (n..n + m).collect(),
            row_of: (0..m).collect(),
        }
    }

    #[inline]
    fn rhs_col(&self) -> usize {
        self.n + self.m
    }

    fn load_phase_one(&mut self) {
        let width = self.rhs_col() + 1;
        self.obj = vec![0.0; width];
        for r in 0..self.t.rows() {
            let row = self.t.row(r);
            for j in 0..self.n {
                self.obj[j] -= row[j];
            }
            self.obj[width - 1] -= row[width - 1];
        }
    }

    fn load_phase_two(&mut self, c: &[f64]) {
        let width = self.rhs_col() + 1;
        let mut obj = vec![0.0; width];
        obj[..self.n].copy_from_slice(c);
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = if bj < self.n { c[bj] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            for (o, &v) in obj.iter_mut().zip(self.t.row(r)) {
                *o -= cb * v;
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let width = self.t.cols();
        let p = self.t[(r, q)];
        for v in self.t.row_mut(r) {
            *v /= p;
        }
        self.t[(r, q)] = 1.0;
        let pivot_row: Vec<f64> = self.t.row(r).to_vec();
        for i in 0..self.t.rows() {
            if i == r {
                continue;
            }
            let f = self.t[(i, q)];
            if f == 0.0 {
                continue;
            }
            let row = self.t.row_mut(i);
            for j in 0..width {
                row[j] -= f * pivot_row[j];
            }
            row[q] = 0.0;
        }
        let f = self.obj[q];
        if f != 0.0 {
            for j in 0..width {
                self.obj[j] -= f * pivot_row[j];
            }
            self.obj[q] = 0.0;
        }
        self.basis[r] = q;
    }

    fn entering(&self, opts: &SimplexOptions, allow_artificial: bool) -> Option<usize> {
        let limit = if allow_artificial { self.n + self.m } else { self.n };
        let candidates = (0..limit).filter(|&j| self.obj[j] < -opts.optimality_tol);
        match opts.pivot_rule {
            PivotRule::Bland => candidates.into_iter().next(),
            PivotRule::Dantzig => candidates.min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b])),
        }
    }

    /// Minimum-ratio row; ties go to the lowest basic variable index.
    fn leaving(&self, q: usize, opts: &SimplexOptions) -> Option<usize> {
        let rhs = self.rhs_col();
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.t.rows() {
            let a = self.t[(r, q)];
            if a <= opts.pivot_tol {
                continue;
            }
            let ratio = self.t[(r, rhs)].max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn run(
        &mut self,
        opts: &SimplexOptions,
        allow_artificial: bool,
        budget: usize,
        iterations: &mut usize,
    ) -> Result<Outcome, LpError> {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        loop {
            let Some(q) = self.entering(opts, allow_artificial) else {
                return Ok(Outcome::Optimal);
            };
            let Some(r) = self.leaving(q, opts) else {
                return Ok(Outcome::Unbounded(q));
            };
            if *iterations >= budget {
                return Err(LpError::IterationLimit(budget));
            }
            let degenerate = self.t[(r, self.rhs_col())].abs() <= 1e-14;
            self.pivot(r, q);
            *iterations += 1;
            if opts.pivot_rule == PivotRule::Dantzig {
                if degenerate {
                    let mut key = self.basis.clone();
                    key.sort_unstable();
                    if !seen.insert(key) {
                        return Err(LpError::Cycling(*iterations));
                    }
                } else {
                    seen.clear();
                }
            }
        }
    }

    /// Pivots zero-level artificials out of the basis. Rows whose structural
    /// part has vanished are linearly dependent and get removed; returns their
    /// original indices.
    fn drive_out_artificials(&mut self, tol: f64) -> Vec<usize> {
        let mut dropped = Vec::new();
        let mut r = 0;
        while r < self.t.rows() {
            if self.basis[r] < self.n {
                r += 1;
                continue;
            }
            let row = self.t.row(r);
            let best = (0..self.n)
                .map(|j| (j, row[j].abs()))
                .filter(|&(_, a)| a > tol)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((j, _)) => {
                    self.pivot(r, j);
                    r += 1;
                }
                None => {
                    dropped.push(self.row_of[r]);
                    self.remove_row(r);
                }
            }
        }
        dropped.sort_unstable();
        dropped
    }

    fn remove_row(&mut self, r: usize) {
        let (rows, cols) = self.t.shape();
        let mut data = Vec::with_capacity((rows - 1) * cols);
        for i in (0..rows).filter(|&i| i != r) {
            data.extend_from_slice(self.t.row(i));
        }
        self.t = Matrix::from_row_major(rows - 1, cols, data).expect("row removal keeps shape");
        self.basis.remove(r);
        self.row_of.remove(r);
    }
}

/// Solves `B x_B = b'` and `B^T y' = c_B` on the kept rows with an LU
/// factorization of the final basis.
fn refine(lp: &StandardLp, sign: &[f64], rows: &[usize], basis: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let k = rows.len();
    if k != basis.len() {
        return None;
    }
    if k == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let b_mat = DMatrix::from_fn(k, k, |i, j| sign[rows[i]] * lp.a[(rows[i], basis[j])]);
    let rhs = nalgebra::DVector::from_fn(k, |i, _| sign[rows[i]] * lp.b[rows[i]]);
    let cb = nalgebra::DVector::from_fn(k, |j, _| lp.c[basis[j]]);
    let lu = b_mat.clone().lu();
    let xb = lu.solve(&rhs)?;
    let y = b_mat.transpose().lu().solve(&cb)?;
    if !xb.iter().chain(y.iter()).all(|v| v.is_finite()) {
        return None;
    }
    Some((xb.iter().copied().collect(), y.iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(a: &[&[f64]], b: &[f64], c: &[f64]) -> StandardLp {
        StandardLp::new(Matrix::from_rows(a).unwrap(), b.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn single_variable_equality() {
        let sol = solve(&lp(&[&[1.0]], &[1.0], &[1.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.dual[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_unbounded_with_ray() {
        // min -x  s.t.  x - s = 0
        let p = lp(&[&[1.0, -1.0]], &[0.0], &[-1.0, 0.0]);
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        let ray = sol.ray.unwrap();
        assert!(ray.iter().all(|&v| v >= -1e-12));
        assert!(p.primal_residual(&ray) < 1e-12 || p.a.mul_vec(&ray).iter().all(|v| v.abs() < 1e-12));
        assert!(dot(&p.c, &ray) < 0.0);
    }

    #[test]
    fn detects_infeasible_with_farkas_vector() {
        // x1 + x2 = -1 with x >= 0
        let p = lp(&[&[1.0, 1.0]], &[-1.0], &[1.0, 1.0]);
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        let y = sol.farkas.unwrap();
        let ya = p.a.transpose().mul_vec(&y);
        assert!(ya.iter().all(|&v| v <= 1e-12));
        assert!(dot(&y, &p.b) > 0.0);
    }

    #[test]
    fn transportation_lp_matches_tv() {
        // couplings of (0.6, 0.4) and (1, 0) under the Hamming cost
        let a: &[&[f64]] = &[
            &[1.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 1.0],
            &[1.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 1.0],
        ];
        let p = lp(a, &[0.6, 0.4, 1.0, 0.0], &[0.0, 1.0, 1.0, 0.0]);
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 0.4).abs() < 1e-12);
        assert_eq!(sol.dropped_rows.len(), 1);
        let check = dual_check(&p, &sol).unwrap();
        assert!(check.gap <= 1e-10, "gap {}", check.gap);
        assert!(check.dual_feasible);
    }

    #[test]
    fn dual_check_reports_perturbed_dual() {
        let p = lp(&[&[1.0, 1.0]], &[1.0], &[1.0, 2.0]);
        let mut sol = solve(&p).unwrap();
        assert!(dual_check(&p, &sol).unwrap().dual_feasible);
        sol.dual[0] += 0.5;
        let check = dual_check(&p, &sol).unwrap();
        assert!(!check.dual_feasible);
        assert!((check.dual_violation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dual_check_rejects_non_optimal() {
        let p = lp(&[&[1.0, -1.0]], &[0.0], &[-1.0, 0.0]);
        let sol = solve(&p).unwrap();
        assert_eq!(dual_check(&p, &sol), Err(LpError::NotOptimal(LpStatus::Unbounded)));
    }

    #[test]
    fn rejects_non_finite_input() {
        let err = StandardLp::new(Matrix::from_rows(&[[f64::NAN]]).unwrap(), vec![1.0], vec![1.0]);
        assert_eq!(err, Err(LpError::NonFinite("A")));
    }

    #[test]
    fn iteration_budget_is_reported() {
        let a: &[&[f64]] = &[&[1.0, 1.0, 1.0], &[1.0, -1.0, 0.0]];
        let p = lp(a, &[1.0, 0.2], &[-1.0, -2.0, -3.0]);
        let opts = SimplexOptions {
            max_iterations: Some(1),
            ..SimplexOptions::default()
        };
        assert_eq!(solve_with(&p, &opts), Err(LpError::IterationLimit(1)));
    }

    #[test]
    fn dantzig_agrees_with_bland() {
        let a: &[&[f64]] = &[&[1.0, 2.0, 1.0, 0.0], &[3.0, 1.0, 0.0, 1.0]];
        let p = lp(a, &[4.0, 6.0], &[-1.0, -1.0, 0.0, 0.0]);
        let bland = solve(&p).unwrap();
        let dantzig = solve_with(
            &p,
            &SimplexOptions {
                pivot_rule: PivotRule::Dantzig,
                ..SimplexOptions::default()
            },
        )
        .unwrap();
        assert!((bland.value - dantzig.value).abs() < 1e-12);
        assert!((bland.value + 2.8).abs() < 1e-12);
    }
}

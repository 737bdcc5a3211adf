//! The linear programs whose optimum is `D(P)` at a single perception level,
//! and the H-representation of their dual feasible set.
//!
//! OT form: variables `Q`, a coupling `Pi` of `(P_X, Q P_Y)` and a slack
//! `eps` with `Pi . H + eps = P`. TV form (Hamming metric only): variables
//! `Q` plus one slack per sign vector `S`, encoding
//! `S . (P_X - Q P_Y) <= 2P` for every `S` except the two constant ones.
//!
//! Both forms share the dual coordinates `(w, r, nu, l)` of the OT form with
//! `nu[n_x - 1] = 0` and `l >= 0`; the dual objective is
//! `w . P_Y + r . P_X - l P`.

use serde::{Deserialize, Serialize};

use crate::error::{DpError, Result};
use crate::lp::{self, HPolyhedron, LpStatus, StandardLp};
use crate::matrix::Matrix;
use crate::model::{output_distribution, wasserstein1, Coupling, Distribution, Estimator, Problem};

/// Largest source alphabet accepted by the TV form (`2^n - 2` sign vectors).
pub const TV_FORM_MAX_NX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    #[default]
    Ot,
    Tv,
}

impl std::str::FromStr for Form {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ot" => Ok(Form::Ot),
            "tv" => Ok(Form::Tv),
            other => Err(format!("unknown form '{other}', expected 'ot' or 'tv'")),
        }
    }
}

/// Index maps of the OT-form program.
///
/// Variables: `Q[x_hat][y]` row-stacked, then `Pi[x][x_hat]` row-stacked,
/// then `eps`. Rows: `n_y` stochasticity rows, `n_x` row marginals of `Pi`,
/// `n_x` rows tying the column marginals of `Pi` to `Q P_Y`, one perception
/// row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtFormLayout {
    pub n_x: usize,
    pub n_y: usize,
}

impl OtFormLayout {
    pub fn q_var(&self, x_hat: usize, y: usize) -> usize {
        x_hat * self.n_y + y
    }

    pub fn pi_var(&self, x: usize, x_hat: usize) -> usize {
        self.n_x * self.n_y + x * self.n_x + x_hat
    }

    pub fn eps_var(&self) -> usize {
        self.n_x * (self.n_y + self.n_x)
    }

    pub fn n_vars(&self) -> usize {
        self.n_x * (self.n_y + self.n_x) + 1
    }

    pub fn stochastic_row(&self, y: usize) -> usize {
        y
    }

    pub fn row_marginal_row(&self, x: usize) -> usize {
        self.n_y + x
    }

    pub fn output_marginal_row(&self, x_hat: usize) -> usize {
        self.n_y + self.n_x + x_hat
    }

    pub fn perception_row(&self) -> usize {
        self.n_y + 2 * self.n_x
    }

    pub fn n_rows(&self) -> usize {
        self.n_y + 2 * self.n_x + 1
    }
}

/// Index maps of the TV-form program. Sign vector `i` is the bit pattern
/// of `i + 1`, with `S_i(x) = +1` when bit `x` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TvFormLayout {
    pub n_x: usize,
    pub n_y: usize,
    pub signs: Vec<Vec<i8>>,
}

impl TvFormLayout {
    pub fn new(n_x: usize, n_y: usize) -> Self {
        let count = (1usize << n_x).saturating_sub(2);
        let signs = (1..=count)
            .map(|mask| (0..n_x).map(|x| if mask >> x & 1 == 1 { 1 } else { -1 }).collect())
            .collect();
        Self { n_x, n_y, signs }
    }

    pub fn q_var(&self, x_hat: usize, y: usize) -> usize {
        x_hat * self.n_y + y
    }

    pub fn slack_var(&self, i: usize) -> usize {
        self.n_x * self.n_y + i
    }

    pub fn n_structural(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn n_vars(&self) -> usize {
        self.n_structural() + self.signs.len()
    }

    pub fn stochastic_row(&self, y: usize) -> usize {
        y
    }

    pub fn sign_row(&self, i: usize) -> usize {
        self.n_y + i
    }

    pub fn n_rows(&self) -> usize {
        self.n_y + self.signs.len()
    }
}

fn check_level(p_level: f64) -> Result<()> {
    if !p_level.is_finite() || p_level < 0.0 {
        return Err(DpError::InvalidPerception(p_level));
    }
    Ok(())
}

pub fn build_ot_form(problem: &Problem, p_level: f64) -> Result<(StandardLp, OtFormLayout)> {
    check_level(p_level)?;
    let n_x = problem.n_x();
    let n_y = problem.n_y();
    let lay = OtFormLayout { n_x, n_y };
    let p_y = problem.p_y();
    let h = problem.metric().matrix();

    let mut a = Matrix::zeros(lay.n_rows(), lay.n_vars());
    let mut b = vec![0.0; lay.n_rows()];
    let mut c = vec![0.0; lay.n_vars()];
    for y in 0..n_y {
        b[lay.stochastic_row(y)] = p_y[y];
        for xh in 0..n_x {
            a[(lay.stochastic_row(y), lay.q_var(xh, y))] = p_y[y];
            a[(lay.output_marginal_row(xh), lay.q_var(xh, y))] = p_y[y];
            c[lay.q_var(xh, y)] = problem.rho()[(xh, y)];
        }
    }
    for x in 0..n_x {
        b[lay.row_marginal_row(x)] = problem.p_x()[x];
        for xh in 0..n_x {
            a[(lay.row_marginal_row(x), lay.pi_var(x, xh))] = 1.0;
            a[(lay.output_marginal_row(xh), lay.pi_var(x, xh))] = -1.0;
            a[(lay.perception_row(), lay.pi_var(x, xh))] = h[(x, xh)];
        }
    }
    a[(lay.perception_row(), lay.eps_var())] = 1.0;
    b[lay.perception_row()] = p_level;
    Ok((StandardLp { a, b, c }, lay))
}

pub fn build_tv_form(problem: &Problem, p_level: f64) -> Result<(StandardLp, TvFormLayout)> {
    check_level(p_level)?;
    if !problem.metric().is_hamming() {
        return Err(DpError::Unsupported("the TV form requires the Hamming metric".into()));
    }
    let n_x = problem.n_x();
    let n_y = problem.n_y();
    if n_x > TV_FORM_MAX_NX {
        return Err(DpError::Unsupported(format!(
            "the TV form needs 2^{n_x} - 2 sign constraints; n_x is limited to {TV_FORM_MAX_NX}"
        )));
    }
    let lay = TvFormLayout::new(n_x, n_y);
    let p_x = problem.p_x();
    let p_y = problem.p_y();

    let mut a = Matrix::zeros(lay.n_rows(), lay.n_vars());
    let mut b = vec![0.0; lay.n_rows()];
    let mut c = vec![0.0; lay.n_vars()];
    for y in 0..n_y {
        b[lay.stochastic_row(y)] = p_y[y];
        for xh in 0..n_x {
            a[(lay.stochastic_row(y), lay.q_var(xh, y))] = p_y[y];
            c[lay.q_var(xh, y)] = problem.rho()[(xh, y)];
        }
    }
    for (i, s) in lay.signs.iter().enumerate() {
        let row = lay.sign_row(i);
        let mut s_px = 0.0;
        for x in 0..n_x {
            let sx = f64::from(s[x]);
            s_px += sx * p_x[x];
            for y in 0..n_y {
                a[(row, lay.q_var(x, y))] = -sx * p_y[y];
            }
        }
        a[(row, lay.slack_var(i))] = 1.0;
        b[row] = 2.0 * p_level - s_px;
    }
    Ok((StandardLp { a, b, c }, lay))
}

/// Dual variables in OT-form coordinates, normalized so `nu[n_x - 1] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub nu: Vec<f64>,
    pub l: f64,
    /// `w . P_Y + r . P_X - l P`.
    pub objective: f64,
}

impl DualSolution {
    fn normalized(mut w: Vec<f64>, mut r: Vec<f64>, mut nu: Vec<f64>, l: f64, problem: &Problem, p_level: f64) -> Self {
        // (w + t, r - t, nu - t) leaves every constraint and the objective unchanged.
        let t = *nu.last().expect("n_x >= 1");
        w.iter_mut().for_each(|v| *v += t);
        r.iter_mut().for_each(|v| *v -= t);
        nu.iter_mut().for_each(|v| *v -= t);
        let objective = dot(&w, problem.p_y()) + dot(&r, problem.p_x()) - l * p_level;
        Self { w, r, nu, l, objective }
    }

    /// The point `w_y = min_x_hat rho'(x_hat, y)`, `r = nu = l = 0`, whose
    /// objective is `D*`.
    pub fn lower_bound(problem: &Problem) -> Self {
        let rp = problem.rho_prime();
        let w: Vec<f64> = (0..problem.n_y())
            .map(|y| (0..problem.n_x()).map(|x| rp[(x, y)]).fold(f64::INFINITY, f64::min))
            .collect();
        let objective = dot(&w, problem.p_y());
        Self {
            w,
            r: vec![0.0; problem.n_x()],
            nu: vec![0.0; problem.n_x()],
            l: 0.0,
            objective,
        }
    }

    /// Coordinates `(w, r, nu[..n_x - 1], l)` of the dual polyhedron.
    pub fn coords(&self) -> Vec<f64> {
        let n_x = self.r.len();
        let mut v = Vec::with_capacity(self.w.len() + 2 * n_x);
        v.extend_from_slice(&self.w);
        v.extend_from_slice(&self.r);
        v.extend_from_slice(&self.nu[..n_x - 1]);
        v.push(self.l);
        v
    }

    /// Largest violation of the dual constraints; zero when feasible.
    pub fn violation(&self, problem: &Problem) -> f64 {
        let rp = problem.rho_prime();
        let h = problem.metric().matrix();
        let n_x = problem.n_x();
        let mut worst = (-self.l).max(0.0);
        for xh in 0..n_x {
            for (y, &wy) in self.w.iter().enumerate() {
                worst = worst.max(wy + self.nu[xh] - rp[(xh, y)]);
            }
            for x in 0..n_x {
                worst = worst.max(self.r[x] - self.nu[xh] - h[(x, xh)] * self.l);
            }
        }
        worst.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub p_level: f64,
    /// `D(p_level)`.
    pub value: f64,
    pub estimator: Estimator,
    /// Coupling of `P_X` and `Q P_Y` with transport cost at most `p_level`.
    pub coupling: Coupling,
    pub dual: DualSolution,
    /// `|value - dual.objective|`.
    pub gap: f64,
    pub form: Form,
    pub iterations: usize,
}

impl SolveReport {
    /// Transport cost of the reported coupling.
    pub fn perception(&self, problem: &Problem) -> f64 {
        self.coupling.matrix().frobenius(problem.metric().matrix())
    }
}

/// `D(p_level)` with an optimal estimator and dual certificate.
///
/// For `p_level` at or above the metric's diameter the perception
/// constraint cannot bind, so the plateau is returned directly: value `D*`,
/// the greedy estimator and the lower-bound dual point.
pub fn solve_dp_at(problem: &Problem, p_level: f64, form: Form) -> Result<SolveReport> {
    check_level(p_level)?;
    if form == Form::Tv {
        // Reject unsupported inputs even on the plateau.
        build_tv_form(problem, 0.0)?;
    }
    if p_level >= problem.metric().diameter() {
        return plateau_report(problem, p_level, form);
    }
    match form {
        Form::Ot => solve_ot(problem, p_level),
        Form::Tv => solve_tv(problem, p_level),
    }
}

fn plateau_report(problem: &Problem, p_level: f64, form: Form) -> Result<SolveReport> {
    let estimator = problem.greedy_estimator();
    let p_x = Distribution::new(problem.p_x().to_vec())?;
    let out = output_distribution(&estimator, problem.p_y())?;
    let (_, coupling) = wasserstein1(&p_x, &out, problem.metric())?;
    let dual = DualSolution::lower_bound(problem);
    let value = problem.d_star();
    Ok(SolveReport {
        p_level,
        value,
        gap: (value - dual.objective).abs(),
        estimator,
        coupling,
        dual,
        form,
        iterations: 0,
    })
}

fn optimal(lp: &StandardLp) -> Result<lp::LpSolution> {
    let sol = lp::solve(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        status => Err(DpError::Internal(format!(
            "the distortion-perception program was reported {status:?}"
        ))),
    }
}

fn extract_q(x: &[f64], n_x: usize, n_y: usize) -> Result<Estimator> {
    Estimator::from_solver(Matrix::from_row_major(n_x, n_y, x[..n_x * n_y].to_vec())?)
}

fn solve_ot(problem: &Problem, p_level: f64) -> Result<SolveReport> {
    let (program, lay) = build_ot_form(problem, p_level)?;
    let sol = optimal(&program)?;
    let (n_x, n_y) = (lay.n_x, lay.n_y);
    let estimator = extract_q(&sol.x, n_x, n_y)?;
    let pi_start = lay.pi_var(0, 0);
    let pi = Matrix::from_row_major(n_x, n_x, sol.x[pi_start..pi_start + n_x * n_x].to_vec())?;
    let out = output_distribution(&estimator, problem.p_y())?;
    let coupling = Coupling::from_solver(pi, problem.p_x(), out.as_slice())?;

    let y = &sol.dual;
    let w = (0..n_y).map(|j| y[lay.stochastic_row(j)]).collect();
    let r = (0..n_x).map(|x| y[lay.row_marginal_row(x)]).collect();
    let nu = (0..n_x).map(|x| y[lay.output_marginal_row(x)]).collect();
    let l = (-y[lay.perception_row()]).max(0.0);
    let dual = DualSolution::normalized(w, r, nu, l, problem, p_level);
    Ok(SolveReport {
        p_level,
        value: sol.value,
        gap: (sol.value - dual.objective).abs(),
        estimator,
        coupling,
        dual,
        form: Form::Ot,
        iterations: sol.iterations,
    })
}

fn solve_tv(problem: &Problem, p_level: f64) -> Result<SolveReport> {
    let (program, lay) = build_tv_form(problem, p_level)?;
    let sol = optimal(&program)?;
    let (n_x, n_y) = (lay.n_x, lay.n_y);
    let estimator = extract_q(&sol.x, n_x, n_y)?;
    let p_x = Distribution::new(problem.p_x().to_vec())?;
    let out = output_distribution(&estimator, problem.p_y())?;
    let (_, coupling) = wasserstein1(&p_x, &out, problem.metric())?;

    // Sign-row duals are nonpositive; they map to nu_x = -sum_i y_i S_i(x),
    // r = nu and l = -2 sum_i y_i.
    let y = &sol.dual;
    let mut nu = vec![0.0; n_x];
    let mut l = 0.0;
    for (i, s) in lay.signs.iter().enumerate() {
        let yi = y[lay.sign_row(i)].min(0.0);
        l -= 2.0 * yi;
        for x in 0..n_x {
            nu[x] -= yi * f64::from(s[x]);
        }
    }
    let w = (0..n_y).map(|j| y[lay.stochastic_row(j)]).collect();
    let dual = DualSolution::normalized(w, nu.clone(), nu, l, problem, p_level);
    Ok(SolveReport {
        p_level,
        value: sol.value,
        gap: (sol.value - dual.objective).abs(),
        estimator,
        coupling,
        dual,
        form: Form::Tv,
        iterations: sol.iterations,
    })
}

/// Coordinate map of the dual polyhedron: `(w, r, nu[..n_x - 1], l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualLayout {
    pub n_x: usize,
    pub n_y: usize,
}

impl DualLayout {
    pub fn w(&self, y: usize) -> usize {
        y
    }

    pub fn r(&self, x: usize) -> usize {
        self.n_y + x
    }

    /// `None` for the last symbol, whose `nu` is fixed to zero.
    pub fn nu(&self, x_hat: usize) -> Option<usize> {
        (x_hat + 1 < self.n_x).then(|| self.n_y + self.n_x + x_hat)
    }

    pub fn l(&self) -> usize {
        self.n_y + 2 * self.n_x - 1
    }

    pub fn dim(&self) -> usize {
        self.n_y + 2 * self.n_x
    }
}

/// `{(w, r, nu, l)}` with rows, in order: `w_y + nu_x_hat <= rho'(x_hat, y)`
/// for `x_hat` outer and `y` inner; `r_x - nu_x_hat - H(x, x_hat) l <= 0` for
/// `x` outer and `x_hat` inner; `-l <= 0`.
pub fn dual_polyhedron(problem: &Problem) -> HPolyhedron {
    let n_x = problem.n_x();
    let n_y = problem.n_y();
    let lay = DualLayout { n_x, n_y };
    let rows = n_x * n_y + n_x * n_x + 1;
    let mut g = Matrix::zeros(rows, lay.dim());
    let mut h = vec![0.0; rows];
    let mut row = 0;
    for xh in 0..n_x {
        for y in 0..n_y {
            g[(row, lay.w(y))] = 1.0;
            if let Some(k) = lay.nu(xh) {
                g[(row, k)] = 1.0;
            }
            h[row] = problem.rho_prime()[(xh, y)];
            row += 1;
        }
    }
    let hm = problem.metric().matrix();
    for x in 0..n_x {
        for xh in 0..n_x {
            g[(row, lay.r(x))] = 1.0;
            if let Some(k) = lay.nu(xh) {
                g[(row, k)] = -1.0;
            }
            g[(row, lay.l())] = -hm[(x, xh)];
            row += 1;
        }
    }
    g[(row, lay.l())] = -1.0;
    HPolyhedron { g, h }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

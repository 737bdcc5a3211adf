//! Problem data for a finite channel `X -> Y` and the elementary quantities
//! built from it: marginals, conditional costs, the unconstrained optimum
//! `D*`, and the TV / Wasserstein-1 perception indices.

use serde::{Deserialize, Serialize};

use crate::error::{DpError, Result};
use crate::lp::{self, LpStatus, StandardLp};
use crate::matrix::Matrix;
use crate::tol::Tolerances;

fn check_finite_nonneg(what: &'static str, m: &Matrix) -> Result<()> {
    for (row, col, value) in m.iter_indexed() {
        if !value.is_finite() {
            return Err(DpError::NonFinite { what, row, col, value });
        }
        if value < 0.0 {
            return Err(DpError::NegativeEntry { what, row, col, value });
        }
    }
    Ok(())
}

/// Joint pmf of `(X, Y)` as an `n_x x n_y` matrix, with cached marginals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointChannel {
    p_xy: Matrix,
    p_x: Vec<f64>,
    p_y: Vec<f64>,
}

impl JointChannel {
    pub fn new(p_xy: Matrix) -> Result<Self> {
        Self::with_tolerances(p_xy, &Tolerances::default())
    }

    pub fn with_tolerances(p_xy: Matrix, tol: &Tolerances) -> Result<Self> {
        if p_xy.rows() == 0 || p_xy.cols() == 0 {
            return Err(DpError::DimensionMismatch {
                what: "joint pmf",
                expected: "at least one row and one column".into(),
                got: format!("{}x{}", p_xy.rows(), p_xy.cols()),
            });
        }
        check_finite_nonneg("joint pmf", &p_xy)?;
        let total: f64 = p_xy.as_slice().iter().sum();
        if (total - 1.0).abs() > tol.validation {
            return Err(DpError::NotNormalized { what: "joint pmf", sum: total });
        }
        let p_y = p_xy.col_sums();
        if let Some(column) = p_y.iter().position(|&p| p <= 0.0) {
            return Err(DpError::UnusedOutputSymbol { column });
        }
        let p_x = p_xy.row_sums();
        Ok(Self { p_xy, p_x, p_y })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// `p(x, y) = p_x(x) p_y(y)`.
    pub fn independent(p_x: &[f64], p_y: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_fn(p_x.len(), p_y.len(), |x, y| p_x[x] * p_y[y]))
    }

    pub fn n_x(&self) -> usize {
        self.p_xy.rows()
    }

    pub fn n_y(&self) -> usize {
        self.p_xy.cols()
    }

    pub fn p_xy(&self) -> &Matrix {
        &self.p_xy
    }

    pub fn p_x(&self) -> &[f64] {
        &self.p_x
    }

    pub fn p_y(&self) -> &[f64] {
        &self.p_y
    }
}

/// Cost `d(x, x_hat)` of reconstructing `x` as `x_hat`. Arbitrary nonnegative
/// finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionMatrix(Matrix);

impl DistortionMatrix {
    pub fn new(d: Matrix) -> Result<Self> {
        if d.rows() != d.cols() {
            return Err(DpError::DimensionMismatch {
                what: "distortion matrix",
                expected: "a square matrix".into(),
                got: format!("{}x{}", d.rows(), d.cols()),
            });
        }
        check_finite_nonneg("distortion matrix", &d)?;
        Ok(Self(d))
    }

    pub fn hamming(n: usize) -> Self {
        Self(Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }
}

/// Ground metric on the source alphabet inducing the Wasserstein-1 distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundMetric(Matrix);

impl GroundMetric {
    pub fn new(h: Matrix) -> Result<Self> {
        Self::with_tolerances(h, &Tolerances::default())
    }

    /// Checks zero diagonal, positivity off the diagonal, symmetry, the
    /// triangle inequality (`O(n^3)`), and the `[0, 1]` range.
    pub fn with_tolerances(h: Matrix, tol: &Tolerances) -> Result<Self> {
        let n = h.rows();
        if n != h.cols() || n == 0 {
            return Err(DpError::DimensionMismatch {
                what: "metric",
                expected: "a nonempty square matrix".into(),
                got: format!("{}x{}", h.rows(), h.cols()),
            });
        }
        for (row, col, value) in h.iter_indexed() {
            if !value.is_finite() {
                return Err(DpError::NonFinite { what: "metric", row, col, value });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(DpError::MetricOutOfRange { row, col, value });
            }
        }
        let eps = tol.equality;
        for i in 0..n {
            if h[(i, i)] != 0.0 {
                return Err(DpError::InvalidMetric(format!(
                    "diagonal entry ({i}, {i}) = {} must be zero",
                    h[(i, i)]
                )));
            }
            for j in 0..n {
                if i != j && h[(i, j)] <= 0.0 {
                    return Err(DpError::InvalidMetric(format!(
                        "entry ({i}, {j}) must be positive for distinct symbols"
                    )));
                }
                if (h[(i, j)] - h[(j, i)]).abs() > eps {
                    return Err(DpError::InvalidMetric(format!(
                        "not symmetric: H[{i}][{j}] = {} but H[{j}][{i}] = {}",
                        h[(i, j)],
                        h[(j, i)]
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if h[(i, k)] > h[(i, j)] + h[(j, k)] + eps {
                        return Err(DpError::InvalidMetric(format!(
                            "triangle inequality fails: H[{i}][{k}] > H[{i}][{j}] + H[{j}][{k}]"
                        )));
                    }
                }
            }
        }
        Ok(Self(h))
    }

    pub fn hamming(n: usize) -> Self {
        Self(Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn is_hamming(&self) -> bool {
        self.0.iter_indexed().all(|(i, j, v)| v == if i == j { 0.0 } else { 1.0 })
    }

    /// Largest transport cost; no coupling costs more than this.
    pub fn diameter(&self) -> f64 {
        self.0.max_entry()
    }
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        Self::with_tolerances(p, &Tolerances::default())
    }

    pub fn with_tolerances(p: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if p.is_empty() {
            return Err(DpError::DimensionMismatch {
                what: "distribution",
                expected: "at least one entry".into(),
                got: "0".into(),
            });
        }
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() {
                return Err(DpError::NonFinite { what: "distribution", row: i, col: 0, value: v });
            }
            if v < 0.0 {
                return Err(DpError::NegativeEntry { what: "distribution", row: i, col: 0, value: v });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol.validation {
            return Err(DpError::NotNormalized { what: "distribution", sum });
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Column-stochastic reconstruction rule, entry `(x_hat, y) = q(x_hat | y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimator(Matrix);

impl Estimator {
    pub fn new(q: Matrix) -> Result<Self> {
        Self::with_tolerances(q, &Tolerances::default())
    }

    pub fn with_tolerances(q: Matrix, tol: &Tolerances) -> Result<Self> {
        check_finite_nonneg("estimator", &q)?;
        for (column, sum) in q.col_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > tol.stochastic {
                return Err(DpError::NotColumnStochastic { column, sum });
            }
        }
        Ok(Self(q))
    }

    /// Clamps tiny negative entries produced by a solver and renormalizes
    /// each column before validating.
    pub(crate) fn from_solver(mut q: Matrix) -> Result<Self> {
        for r in 0..q.rows() {
            for v in q.row_mut(r) {
                if *v <= 0.0 && *v > -1e-9 {
                    *v = 0.0;
                }
            }
        }
        let sums = q.col_sums();
        for r in 0..q.rows() {
            for (v, s) in q.row_mut(r).iter_mut().zip(&sums) {
                if *s > 0.0 {
                    *v /= s;
                }
            }
        }
        Self::new(q)
    }

    /// Deterministic rule sending output `y` to `targets[y]`.
    pub fn deterministic(n_x: usize, targets: &[usize]) -> Self {
        Self(Matrix::from_fn(n_x, targets.len(), |x, y| if targets[y] == x { 1.0 } else { 0.0 }))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n_x(&self) -> usize {
        self.0.rows()
    }

    pub fn n_y(&self) -> usize {
        self.0.cols()
    }

    /// `alpha * a + (1 - alpha) * b`.
    pub fn mix(a: &Estimator, b: &Estimator, alpha: f64) -> Result<Estimator> {
        if a.0.shape() != b.0.shape() {
            return Err(DpError::DimensionMismatch {
                what: "estimator mixture",
                expected: format!("{:?}", a.0.shape()),
                got: format!("{:?}", b.0.shape()),
            });
        }
        let (rows, cols) = a.0.shape();
        let m = Matrix::from_fn(rows, cols, |r, c| alpha * a.0[(r, c)] + (1.0 - alpha) * b.0[(r, c)]);
        Estimator::from_solver(m)
    }

    pub fn is_deterministic(&self) -> bool {
        self.0.as_slice().iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// Joint pmf on `X x X_hat` with prescribed marginals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling(Matrix);

impl Coupling {
    pub fn new(pi: Matrix, first: &[f64], second: &[f64]) -> Result<Self> {
        Self::with_tolerances(pi, first, second, &Tolerances::default())
    }

    pub fn with_tolerances(pi: Matrix, first: &[f64], second: &[f64], tol: &Tolerances) -> Result<Self> {
        if pi.rows() != first.len() || pi.cols() != second.len() {
            return Err(DpError::DimensionMismatch {
                what: "coupling",
                expected: format!("{}x{}", first.len(), second.len()),
                got: format!("{}x{}", pi.rows(), pi.cols()),
            });
        }
        check_finite_nonneg("coupling", &pi)?;
        for (i, (s, p)) in pi.row_sums().iter().zip(first).enumerate() {
            if (s - p).abs() > tol.stochastic {
                return Err(DpError::BadCoupling(format!("row {i} sums to {s}, expected {p}")));
            }
        }
        for (j, (s, p)) in pi.col_sums().iter().zip(second).enumerate() {
            if (s - p).abs() > tol.stochastic {
                return Err(DpError::BadCoupling(format!("column {j} sums to {s}, expected {p}")));
            }
        }
        Ok(Self(pi))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub(crate) fn from_solver(mut pi: Matrix, first: &[f64], second: &[f64]) -> Result<Self> {
        for r in 0..pi.rows() {
            for v in pi.row_mut(r) {
                if *v <= 0.0 && *v > -1e-9 {
                    *v = 0.0;
                }
            }
        }
        Self::new(pi, first, second)
    }
}

/// A validated problem: channel, distortion and ground metric of matching
/// sizes, with `rho`, `rho'` and `D*` cached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    channel: JointChannel,
    distortion: DistortionMatrix,
    metric: GroundMetric,
    tolerances: Tolerances,
    rho: Matrix,
    rho_prime: Matrix,
    d_star: f64,
    greedy: Vec<usize>,
}

pub fn validate_problem(channel: JointChannel, d: DistortionMatrix, h: GroundMetric) -> Result<Problem> {
    Problem::new(channel, d, h)
}

impl Problem {
    pub fn new(channel: JointChannel, distortion: DistortionMatrix, metric: GroundMetric) -> Result<Self> {
        Self::with_tolerances(channel, distortion, metric, Tolerances::default())
    }

    pub fn with_tolerances(
        channel: JointChannel,
        distortion: DistortionMatrix,
        metric: GroundMetric,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let n_x = channel.n_x();
        if distortion.n() != n_x {
            return Err(DpError::DimensionMismatch {
                what: "distortion matrix",
                expected: format!("{n_x}x{n_x}"),
                got: format!("{0}x{0}", distortion.n()),
            });
        }
        if metric.n() != n_x {
            return Err(DpError::DimensionMismatch {
                what: "metric",
                expected: format!("{n_x}x{n_x}"),
                got: format!("{0}x{0}", metric.n()),
            });
        }
        let rho = rho(&channel, &distortion);
        let rho_prime = rho_prime_from(&rho, channel.p_y());
        let (d_star, greedy) = d_star_from(&rho);
        Ok(Self {
            channel,
            distortion,
            metric,
            tolerances,
            rho,
            rho_prime,
            d_star,
            greedy,
        })
    }

    /// Hamming distortion and Hamming metric.
    pub fn hamming(channel: JointChannel) -> Result<Self> {
        let n = channel.n_x();
        Self::new(channel, DistortionMatrix::hamming(n), GroundMetric::hamming(n))
    }

    pub fn channel(&self) -> &JointChannel {
        &self.channel
    }

    pub fn distortion(&self) -> &DistortionMatrix {
        &self.distortion
    }

    pub fn metric(&self) -> &GroundMetric {
        &self.metric
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn n_x(&self) -> usize {
        self.channel.n_x()
    }

    pub fn n_y(&self) -> usize {
        self.channel.n_y()
    }

    pub fn p_x(&self) -> &[f64] {
        self.channel.p_x()
    }

    pub fn p_y(&self) -> &[f64] {
        self.channel.p_y()
    }

    /// `rho = D^T P_XY`.
    pub fn rho(&self) -> &Matrix {
        &self.rho
    }

    /// `rho'(x_hat, y) = E[d(X, x_hat) | Y = y]`.
    pub fn rho_prime(&self) -> &Matrix {
        &self.rho_prime
    }

    pub fn d_star(&self) -> f64 {
        self.d_star
    }

    /// The greedy estimator attaining `D*`.
    pub fn greedy_estimator(&self) -> Estimator {
        Estimator::deterministic(self.n_x(), &self.greedy)
    }

    pub fn expected_distortion(&self, q: &Estimator) -> Result<f64> {
        expected_distortion(&self.channel, &self.distortion, q)
    }

    /// `W1(P_X, Q P_Y)` under the problem's metric.
    pub fn perception(&self, q: &Estimator) -> Result<f64> {
        let out = output_distribution(q, self.p_y())?;
        let p_x = Distribution(self.p_x().to_vec());
        Ok(wasserstein1(&p_x, &out, &self.metric)?.0)
    }
}

/// `rho(x_hat, y) = sum_x d(x, x_hat) p(x, y)`.
pub fn rho(channel: &JointChannel, d: &DistortionMatrix) -> Matrix {
    d.matrix().transpose().matmul(channel.p_xy())
}

pub fn rho_prime(channel: &JointChannel, d: &DistortionMatrix) -> Matrix {
    rho_prime_from(&rho(channel, d), channel.p_y())
}

fn rho_prime_from(rho: &Matrix, p_y: &[f64]) -> Matrix {
    Matrix::from_fn(rho.rows(), rho.cols(), |x, y| rho[(x, y)] / p_y[y])
}

/// Per-column minimum of `rho`, lowest index on ties.
fn d_star_from(rho: &Matrix) -> (f64, Vec<usize>) {
    let mut total = 0.0;
    let mut targets = Vec::with_capacity(rho.cols());
    for y in 0..rho.cols() {
        let mut best = 0;
        for x in 1..rho.rows() {
            if rho[(x, y)] < rho[(best, y)] {
                best = x;
            }
        }
        total += rho[(best, y)];
        targets.push(best);
    }
    (total, targets)
}

/// `D* = sum_y min_x_hat rho(x_hat, y)` and the deterministic estimator
/// attaining it.
pub fn d_star(channel: &JointChannel, d: &DistortionMatrix) -> (f64, Estimator) {
    let (value, targets) = d_star_from(&rho(channel, d));
    (value, Estimator::deterministic(channel.n_x(), &targets))
}

/// `tr(P_XY^T D Q)`.
pub fn expected_distortion(channel: &JointChannel, d: &DistortionMatrix, q: &Estimator) -> Result<f64> {
    if q.n_x() != channel.n_x() || q.n_y() != channel.n_y() {
        return Err(DpError::DimensionMismatch {
            what: "estimator",
            expected: format!("{}x{}", channel.n_x(), channel.n_y()),
            got: format!("{}x{}", q.n_x(), q.n_y()),
        });
    }
    Ok(rho(channel, d).frobenius(q.matrix()))
}

/// `Q = P_{X|Y}`.
pub fn posterior_sampling(channel: &JointChannel) -> Estimator {
    let p_y = channel.p_y();
    let q = Matrix::from_fn(channel.n_x(), channel.n_y(), |x, y| channel.p_xy()[(x, y)] / p_y[y]);
    Estimator(q)
}

/// `Q P_Y`.
pub fn output_distribution(q: &Estimator, p_y: &[f64]) -> Result<Distribution> {
    if q.n_y() != p_y.len() {
        return Err(DpError::DimensionMismatch {
            what: "output distribution",
            expected: format!("P_Y of length {}", q.n_y()),
            got: format!("length {}", p_y.len()),
        });
    }
    Ok(Distribution(q.matrix().mul_vec(p_y)))
}

fn check_same_len(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(DpError::DimensionMismatch {
            what: "distribution pair",
            expected: format!("length {}", p.len()),
            got: format!("length {}", q.len()),
        });
    }
    Ok(())
}

/// Half the L1 distance.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_len(p, q)?;
    Ok(0.5 * p.0.iter().zip(&q.0).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Transport LP over couplings `Pi` of `(p, q)`: variables `Pi[x][x_hat]`
/// row-stacked, `n` row-marginal then `n` column-marginal constraints.
pub(crate) fn transport_lp(p: &[f64], q: &[f64], h: &Matrix) -> StandardLp {
    let n = p.len();
    let mut a = Matrix::zeros(2 * n, n * n);
    for x in 0..n {
        for xh in 0..n {
            a[(x, x * n + xh)] = 1.0;
            a[(n + xh, x * n + xh)] = 1.0;
        }
    }
    let b = p.iter().chain(q).copied().collect();
    let c = h.as_slice().to_vec();
    StandardLp { a, b, c }
}

/// `min_Pi Pi . H` over couplings of `(p, q)`, with an optimal coupling.
pub fn wasserstein1(p: &Distribution, q: &Distribution, h: &GroundMetric) -> Result<(f64, Coupling)> {
    check_same_len(p, q)?;
    if h.n() != p.len() {
        return Err(DpError::DimensionMismatch {
            what: "metric",
            expected: format!("{0}x{0}", p.len()),
            got: format!("{0}x{0}", h.n()),
        });
    }
    let n = p.len();
    let program = transport_lp(&p.0, &q.0, h.matrix());
    let sol = lp::solve(&program)?;
    if sol.status != LpStatus::Optimal {
        return Err(DpError::Internal(format!("transport LP returned {:?}", sol.status)));
    }
    let pi = Matrix::from_row_major(n, n, sol.x)?;
    let coupling = Coupling::from_solver(pi, &p.0, &q.0)?;
    Ok((sol.value.max(0.0), coupling))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc() -> JointChannel {
        JointChannel::from_rows(&[[0.54, 0.06], [0.04, 0.36]]).unwrap()
    }

    fn noiseless() -> JointChannel {
        JointChannel::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap()
    }

    fn independent() -> JointChannel {
        JointChannel::independent(&[0.6, 0.4], &[0.5, 0.5]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Double sum `sum_x d(x, x_hat) p(x, y)` written out directly.
    fn rho_oracle(p: &[[f64; 2]; 2], d: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for xh in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    out[xh][y] += d[x][xh] * p[x][y];
                }
            }
        }
        out
    }

    #[test]
    fn accepts_noiseless_channel() {
        let p = Problem::hamming(noiseless()).unwrap();
        assert_eq!(p.p_x(), &[0.5, 0.5]);
        assert_eq!(p.p_y(), &[0.5, 0.5]);
    }

    #[test]
    fn unused_output_symbol_rejected() {
        assert!(JointChannel::from_rows(&[[0.5, 0.5], [0.0, 0.0]]).is_ok());
        assert_eq!(
            JointChannel::from_rows(&[[1.0, 0.0], [0.0, 0.0]]),
            Err(DpError::UnusedOutputSymbol { column: 1 })
        );
    }

    #[test]
    fn bad_joint_rejected() {
        assert!(matches!(
            JointChannel::from_rows(&[[0.6, -0.1], [0.2, 0.3]]),
            Err(DpError::NegativeEntry { .. })
        ));
        assert!(matches!(
            JointChannel::from_rows(&[[0.5, 0.2], [0.2, 0.2]]),
            Err(DpError::NotNormalized { .. })
        ));
    }

    #[test]
    fn metric_axioms() {
        let asym = Matrix::from_rows(&[[0.0, 0.2], [0.9, 0.0]]).unwrap();
        assert!(matches!(GroundMetric::new(asym), Err(DpError::InvalidMetric(_))));
        let diag = Matrix::from_rows(&[[0.1, 0.2], [0.2, 0.0]]).unwrap();
        assert!(matches!(GroundMetric::new(diag), Err(DpError::InvalidMetric(_))));
        let tri = Matrix::from_rows(&[[0.0, 0.1, 0.9], [0.1, 0.0, 0.1], [0.9, 0.1, 0.0]]).unwrap();
        assert!(matches!(GroundMetric::new(tri), Err(DpError::InvalidMetric(_))));
        let big = Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap();
        assert!(matches!(GroundMetric::new(big), Err(DpError::MetricOutOfRange { .. })));
        let ok = Matrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]).unwrap();
        assert!(GroundMetric::new(ok).is_ok());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = Problem::new(bsc(), DistortionMatrix::hamming(3), GroundMetric::hamming(2));
        assert!(matches!(err, Err(DpError::DimensionMismatch { .. })));
    }

    #[test]
    fn rho_matches_double_sum() {
        let p = [[0.54, 0.06], [0.04, 0.36]];
        let d = [[0.0, 1.0], [1.0, 0.0]];
        let expected = rho_oracle(&p, &d);
        let problem = Problem::hamming(bsc()).unwrap();
        for xh in 0..2 {
            for y in 0..2 {
                assert!(close(problem.rho()[(xh, y)], expected[xh][y], 1e-15));
            }
        }
        assert!(close(expected[0][0], 0.04, 1e-15) && close(expected[1][1], 0.06, 1e-15));

        let noiseless_rho = rho_oracle(&[[0.5, 0.0], [0.0, 0.5]], &d);
        let got = Problem::hamming(noiseless()).unwrap();
        assert_eq!(got.rho().to_rows(), vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
        assert_eq!(noiseless_rho, [[0.0, 0.5], [0.5, 0.0]]);
    }

    #[test]
    fn zero_distortion_gives_zero_rho() {
        let zero = DistortionMatrix::new(Matrix::zeros(2, 2)).unwrap();
        assert!(rho(&bsc(), &zero).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rho_prime_values() {
        let rp = rho_prime(&bsc(), &DistortionMatrix::hamming(2));
        assert!(close(rp[(0, 0)], 0.04 / 0.58, 1e-15));
        assert!(close(rp[(0, 1)], 0.36 / 0.42, 1e-15));
        assert!(close(rp[(1, 0)], 0.54 / 0.58, 1e-15));
        assert!(close(rp[(1, 1)], 0.06 / 0.42, 1e-15));
        assert!(close(rp[(0, 0)], 0.06897, 1e-5) && close(rp[(1, 1)], 0.14286, 1e-5));

        let rp = rho_prime(&noiseless(), &DistortionMatrix::hamming(2));
        assert_eq!(rp.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        // E[d(X, x_hat)] does not depend on y when X and Y are independent
        let rp = rho_prime(&independent(), &DistortionMatrix::hamming(2));
        for y in 0..2 {
            assert!(close(rp[(0, y)], 0.4, 1e-15));
            assert!(close(rp[(1, y)], 0.6, 1e-15));
        }
    }

    #[test]
    fn expected_distortion_cases() {
        let ch = noiseless();
        let id = Estimator::new(Matrix::identity(2)).unwrap();
        assert_eq!(expected_distortion(&ch, &DistortionMatrix::hamming(2), &id).unwrap(), 0.0);

        let constant = DistortionMatrix::new(Matrix::filled(2, 2, 0.7)).unwrap();
        let q = posterior_sampling(&bsc());
        assert!(close(expected_distortion(&bsc(), &constant, &q).unwrap(), 0.7, 1e-15));

        // brute force over the four deterministic maps
        let mut best = f64::INFINITY;
        for t0 in 0..2 {
            for t1 in 0..2 {
                let q = Estimator::deterministic(2, &[t0, t1]);
                best = best.min(expected_distortion(&bsc(), &DistortionMatrix::hamming(2), &q).unwrap());
            }
        }
        assert!(close(best, 0.10, 1e-15));
        let greedy = Problem::hamming(bsc()).unwrap().greedy_estimator();
        assert!(close(expected_distortion(&bsc(), &DistortionMatrix::hamming(2), &greedy).unwrap(), 0.10, 1e-15));
    }

    #[test]
    fn expected_distortion_dimension_mismatch() {
        let q = Estimator::new(Matrix::filled(3, 2, 1.0 / 3.0)).unwrap();
        assert!(expected_distortion(&bsc(), &DistortionMatrix::hamming(2), &q).is_err());
    }

    #[test]
    fn posterior_sampling_cases() {
        assert_eq!(posterior_sampling(&noiseless()).matrix(), &Matrix::identity(2));
        let q = posterior_sampling(&independent());
        for y in 0..2 {
            assert!(close(q.matrix()[(0, y)], 0.6, 1e-15) && close(q.matrix()[(1, y)], 0.4, 1e-15));
        }
        let q = posterior_sampling(&bsc());
        assert!(close(q.matrix()[(0, 0)], 0.54 / 0.58, 1e-15));
        assert!(close(q.matrix()[(1, 0)], 0.04 / 0.58, 1e-15));
        assert!(close(q.matrix()[(0, 1)], 0.06 / 0.42, 1e-15));
        assert!(close(q.matrix()[(1, 1)], 0.36 / 0.42, 1e-15));
        let out = output_distribution(&q, bsc().p_y()).unwrap();
        assert!(close(out.as_slice()[0], 0.6, 1e-15));
    }

    #[test]
    fn d_star_cases() {
        let (v, q) = d_star(&noiseless(), &DistortionMatrix::hamming(2));
        assert_eq!(v, 0.0);
        assert_eq!(q.matrix(), &Matrix::identity(2));

        let (v, q) = d_star(&bsc(), &DistortionMatrix::hamming(2));
        assert!(close(v, 0.10, 1e-15));
        assert_eq!(q, Estimator::deterministic(2, &[0, 1]));

        let (v, q) = d_star(&independent(), &DistortionMatrix::hamming(2));
        assert!(close(v, 0.4, 1e-15));
        assert_eq!(q, Estimator::deterministic(2, &[0, 0]));
    }

    #[test]
    fn output_distribution_cases() {
        let id = Estimator::new(Matrix::identity(2)).unwrap();
        assert_eq!(output_distribution(&id, &[0.3, 0.7]).unwrap().as_slice(), &[0.3, 0.7]);
        let constant = Estimator::new(Matrix::from_rows(&[[0.2, 0.2, 0.2], [0.8, 0.8, 0.8]]).unwrap()).unwrap();
        let out = output_distribution(&constant, &[0.1, 0.5, 0.4]).unwrap();
        assert!(close(out.as_slice()[0], 0.2, 1e-15) && close(out.as_slice()[1], 0.8, 1e-15));
        assert!(output_distribution(&id, &[1.0]).is_err());
    }

    #[test]
    fn tv_cases() {
        let a = Distribution::new(vec![1.0, 0.0]).unwrap();
        let b = Distribution::new(vec![0.0, 1.0]).unwrap();
        let c = Distribution::new(vec![0.6, 0.4]).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(tv_distance(&c, &c).unwrap(), 0.0);
        assert!(close(tv_distance(&c, &a).unwrap(), 0.4, 1e-15));
        let d = Distribution::new(vec![1.0]).unwrap();
        assert!(tv_distance(&a, &d).is_err());
    }

    #[test]
    fn w1_cases() {
        let p = Distribution::new(vec![0.6, 0.4]).unwrap();
        let q = Distribution::new(vec![1.0, 0.0]).unwrap();
        let (v, pi) = wasserstein1(&p, &p, &GroundMetric::hamming(2)).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(close(pi.matrix()[(0, 0)], 0.6, 1e-15) && close(pi.matrix()[(1, 1)], 0.4, 1e-15));

        let (v, _) = wasserstein1(&p, &q, &GroundMetric::hamming(2)).unwrap();
        assert!(close(v, 0.4, 1e-15));

        // one-parameter coupling family: Pi = [[t, 0.6 - t], [1 - t, t - 0.6]] with t in [0.6, 0.6]
        let half = GroundMetric::new(Matrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]).unwrap()).unwrap();
        let brute = (0..=1000)
            .map(|k| 0.6 * k as f64 / 1000.0)
            .filter_map(|t| {
                let pi = [[t, 0.6 - t], [1.0 - t, t - 0.6]];
                (pi.iter().flatten().all(|&v| v >= -1e-15)).then(|| 0.5 * (pi[0][1] + pi[1][0]))
            })
            .fold(f64::INFINITY, f64::min);
        let (v, _) = wasserstein1(&p, &q, &half).unwrap();
        assert!(close(v, brute, 1e-12));
        assert!(close(v, 0.2, 1e-15));
    }

    #[test]
    fn estimator_validation() {
        assert!(matches!(
            Estimator::new(Matrix::from_rows(&[[0.5, 1.0], [0.4, 0.0]]).unwrap()),
            Err(DpError::NotColumnStochastic { column: 0, .. })
        ));
        let a = Estimator::deterministic(2, &[0, 1]);
        let b = Estimator::deterministic(2, &[1, 1]);
        let m = Estimator::mix(&a, &b, 0.25).unwrap();
        assert!(close(m.matrix()[(0, 0)], 0.25, 1e-15));
        assert!(a.is_deterministic() && !m.is_deterministic());
    }
}

//! Solver-free `D(P)` for binary sources.
//!
//! With `u_y = (rho'(x1, y) - rho'(x2, y)) / 2`, moving output `y` from
//! `x2` to `x1` costs `2 u_y p_y` and shifts `p_y` of output mass. The
//! greedy rule sends `y` to `x1` iff `u_y <= 0`, putting mass `F(0)` on
//! `x1`, where `F(u)` is the `P_Y` mass of `{y : u_y <= u}`. If `p_x1`
//! exceeds that, `D` is rebuilt by recruiting outputs to `x1` in increasing
//! order of `u_y`; the opposite case is the mirror image; otherwise the curve
//! is flat. Any metric on two symbols is `h` times Hamming, so perception
//! levels are handled in TV units `P / h`.

use serde::Serialize;

use crate::curve::{AnchorEstimator, CurveMethod, CurveReport, PiecewiseLinearDP, ProjectedPoint};
use crate::error::{DpError, Result};
use crate::matrix::Matrix;
use crate::model::{Estimator, Problem};
use crate::tol::COST_TIE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryCase {
    /// `p_x1 > F(0)`: the greedy rule starves `x1`.
    X1Underallocated,
    /// `p_x1 < F(0-)`: the greedy rule floods `x1`.
    X1Overallocated,
    /// `F(0-) <= p_x1 <= F(0)`: ties at `u = 0` absorb the difference.
    Balanced,
}

/// Right-continuous step CDF of `P_Y` over the values `u_y`. Values within
/// `1e-12` of each other are one jump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCdf {
    /// Jump locations, increasing.
    pub jumps: Vec<f64>,
    /// `cumulative[k]` is the mass at or below `jumps[k]`.
    pub cumulative: Vec<f64>,
}

impl StepCdf {
    pub fn new(u: &[f64], p_y: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..u.len()).collect();
        order.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));
        let mut jumps: Vec<f64> = Vec::new();
        let mut cumulative: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for y in order {
            acc += p_y[y];
            match jumps.last() {
                Some(&j) if u[y] - j <= COST_TIE => *cumulative.last_mut().expect("paired") = acc,
                _ => {
                    jumps.push(u[y]);
                    cumulative.push(acc);
                }
            }
        }
        Self { jumps, cumulative }
    }

    /// `F(u)`: mass of `{y : u_y <= u}`.
    pub fn at(&self, u: f64) -> f64 {
        let k = self.jumps.partition_point(|&j| j <= u + COST_TIE);
        if k == 0 { 0.0 } else { self.cumulative[k - 1] }
    }

    /// `F(u-)`: mass of `{y : u_y < u}`.
    pub fn left_limit(&self, u: f64) -> f64 {
        let k = self.jumps.partition_point(|&j| j < u - COST_TIE);
        if k == 0 { 0.0 } else { self.cumulative[k - 1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinaryAnalysis {
    /// `u_y` in input order.
    pub u: Vec<f64>,
    /// Outputs sorted by increasing `u_y`, ties by index.
    pub order: Vec<usize>,
    pub case: BinaryCase,
    pub cdf: StepCdf,
    /// `P*_0 >= P*_1 >= ... >= P*_I`, in perception units; zero-length
    /// intervals removed.
    pub breakpoints: Vec<f64>,
    /// `slopes[i]` is the slope of `D` just left of `breakpoints[i]`.
    pub slopes: Vec<f64>,
    /// `I`, the index of the last recruited cost level.
    pub i_max: usize,
    pub d_star: f64,
    /// `H(x1, x2)`.
    pub scale: f64,
    /// Recruitment levels `v_1 < v_2 < ...` in the oriented problem.
    levels: Vec<f64>,
    /// Whether `x1` and `x2` were swapped to reach the underallocated case.
    mirrored: bool,
}

fn require_binary(problem: &Problem) -> Result<()> {
    if problem.n_x() != 2 {
        return Err(DpError::Unsupported(format!(
            "the closed form needs a binary source, got n_x = {}",
            problem.n_x()
        )));
    }
    Ok(())
}

pub fn u_values(problem: &Problem) -> Result<Vec<f64>> {
    require_binary(problem)?;
    let rp = problem.rho_prime();
    Ok((0..problem.n_y()).map(|y| 0.5 * (rp[(0, y)] - rp[(1, y)])).collect())
}

pub fn analyze(problem: &Problem) -> Result<BinaryAnalysis> {
    let u = u_values(problem)?;
    let p_y = problem.p_y();
    let p1 = problem.p_x()[0];
    let scale = problem.metric().matrix()[(0, 1)];
    let cdf = StepCdf::new(&u, p_y);
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));

    let case = if p1 > cdf.at(0.0) + COST_TIE {
        BinaryCase::X1Underallocated
    } else if p1 < cdf.left_limit(0.0) - COST_TIE {
        BinaryCase::X1Overallocated
    } else {
        BinaryCase::Balanced
    };
    let mirrored = case == BinaryCase::X1Overallocated;

    // The oriented problem is always underallocated (or balanced).
    let ou: Vec<f64> = u.iter().map(|&v| if mirrored { -v } else { v }).collect();
    let op1 = if mirrored { problem.p_x()[1] } else { p1 };
    let ocdf = StepCdf::new(&ou, p_y);
    let levels: Vec<f64> = ocdf.jumps.iter().copied().filter(|&v| v > COST_TIE).collect();

    let mut breakpoints = Vec::new();
    let mut slopes = Vec::new();
    let mut i_max = 0;
    if case != BinaryCase::Balanced {
        let mut i = 0;
        loop {
            let f = if i == 0 { ocdf.at(0.0) } else { ocdf.at(levels[i - 1]) };
            let p_star = op1 - f;
            if p_star < -COST_TIE {
                break;
            }
            i_max = i;
            if p_star <= COST_TIE || i == levels.len() {
                // [0, P*_i] has zero length.
                if p_star > COST_TIE {
                    return Err(DpError::Internal("cost levels exhausted before reaching P = 0".into()));
                }
                break;
            }
            breakpoints.push(scale * p_star);
            slopes.push(-2.0 * levels[i] / scale);
            i += 1;
        }
    }
    Ok(BinaryAnalysis {
        u,
        order,
        case,
        cdf,
        breakpoints,
        slopes,
        i_max,
        d_star: problem.d_star(),
        scale,
        levels,
        mirrored,
    })
}

impl BinaryAnalysis {
    /// The curve as interior breakpoints (increasing) and the slopes of the
    /// intervals left of each.
    pub fn curve(&self) -> Result<PiecewiseLinearDP> {
        let bps: Vec<f64> = self.breakpoints.iter().rev().copied().collect();
        let slopes: Vec<f64> = self.slopes.iter().rev().copied().collect();
        if bps.is_empty() {
            return Ok(PiecewiseLinearDP::flat(self.d_star));
        }
        PiecewiseLinearDP::from_slopes(bps, slopes, self.d_star)
    }

    fn oriented_u(&self, y: usize) -> f64 {
        if self.mirrored { -self.u[y] } else { self.u[y] }
    }

    /// Estimator from `q(x1' | y)` of the oriented problem.
    fn to_estimator(&self, q1: &[f64]) -> Result<Estimator> {
        let (top, bottom): (Vec<f64>, Vec<f64>) = q1.iter().map(|&q| (q, 1.0 - q)).unzip();
        let rows = if self.mirrored { [bottom, top] } else { [top, bottom] };
        Estimator::new(Matrix::from_rows(&rows)?)
    }

    /// `q(x1' | y) = 1` iff the oriented `u_y <= threshold`.
    fn threshold_rule(&self, threshold: f64) -> Vec<f64> {
        (0..self.u.len())
            .map(|y| if self.oriented_u(y) <= threshold + COST_TIE { 1.0 } else { 0.0 })
            .collect()
    }

    /// Rule with `P_X_hat = P_X`: recruit outputs to `x1'` in increasing
    /// oriented `u_y` until its mass reaches `p_x1'`, splitting the marginal
    /// output.
    fn zero_level_rule(&self, p1: f64, p_y: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..self.u.len()).collect();
        order.sort_by(|&a, &b| self.oriented_u(a).total_cmp(&self.oriented_u(b)).then(a.cmp(&b)));
        let mut q = vec![0.0; self.u.len()];
        let mut need = p1;
        for y in order {
            if need <= 0.0 {
                break;
            }
            let take = need.min(p_y[y]);
            q[y] = take / p_y[y];
            need -= take;
        }
        q
    }

    /// `p_x1` of the oriented problem.
    fn oriented_p1(&self, problem: &Problem) -> f64 {
        problem.p_x()[usize::from(self.mirrored)]
    }

    /// Optimal estimators at `P = 0` and at every breakpoint, increasing in
    /// `p_level`. Breakpoint estimators are deterministic.
    pub fn anchors(&self, problem: &Problem) -> Result<Vec<AnchorEstimator>> {
        let zero = self.zero_level_rule(self.oriented_p1(problem), problem.p_y());
        let mut out = vec![AnchorEstimator { p_level: 0.0, estimator: self.to_estimator(&zero)? }];
        for (p_level, rule) in breakpoint_rules(self).into_iter().rev() {
            out.push(AnchorEstimator { p_level, estimator: self.to_estimator(&rule)? });
        }
        Ok(out)
    }
}

/// `(P*_i, q(x1' | y) = [u_y <= v_i])` for `i = 0..` in the order of
/// `analysis.breakpoints`, with `v_0 = 0`.
fn breakpoint_rules(a: &BinaryAnalysis) -> Vec<(f64, Vec<f64>)> {
    a.breakpoints
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let threshold = if i == 0 { 0.0 } else { a.levels[i - 1] };
            (p, a.threshold_rule(threshold))
        })
        .collect()
}

pub fn closed_form_curve(problem: &Problem) -> Result<PiecewiseLinearDP> {
    analyze(problem)?.curve()
}

/// Deterministic optimal estimators at every breakpoint `P*_i > 0`, in the
/// order `P*_0, P*_1, ...`.
pub fn breakpoint_estimators(problem: &Problem, analysis: &BinaryAnalysis) -> Result<Vec<(f64, Estimator)>> {
    require_binary(problem)?;
    breakpoint_rules(analysis)
        .into_iter()
        .map(|(p, rule)| Ok((p, analysis.to_estimator(&rule)?)))
        .collect()
}

/// An estimator on the curve at `p_level`: the convex combination of the
/// two anchors around it, or the `P*_0` anchor from `P*_0` on.
pub fn estimator_at(problem: &Problem, analysis: &BinaryAnalysis, p_level: f64) -> Result<Estimator> {
    if !p_level.is_finite() || p_level < 0.0 {
        return Err(DpError::InvalidPerception(p_level));
    }
    let anchors = analysis.anchors(problem)?;
    let last = anchors.last().expect("the zero-level anchor is always present");
    if p_level >= last.p_level {
        return Ok(last.estimator.clone());
    }
    let k = anchors.partition_point(|a| a.p_level <= p_level);
    let (a, b) = (&anchors[k - 1], &anchors[k]);
    let alpha = (b.p_level - p_level) / (b.p_level - a.p_level);
    Estimator::mix(&a.estimator, &b.estimator, alpha)
}

/// The closed form packaged like the LP-based curve reports, with the
/// segment lines as the projected points.
pub fn closed_form_report(problem: &Problem) -> Result<CurveReport> {
    let analysis = analyze(problem)?;
    let curve = analysis.curve()?;
    let s2_points: Vec<ProjectedPoint> = curve
        .segments()
        .iter()
        .map(|s| ProjectedPoint { p0: s.intercept, p1: s.slope })
        .collect();
    let hull_extremes = crate::curve::hull_extremes(&s2_points);
    Ok(CurveReport {
        estimators: analysis.anchors(problem)?,
        curve,
        method: CurveMethod::ClosedForm,
        s2_points,
        hull_extremes,
        solves: 0,
    })
}

/// `J_P(u) = sum_{u_y <= u} rho(x1, y) + sum_{u_y > u} rho(x2, y)
///  + 2 (p_x1 - F(u)) u - 2 (P / h) |u|`, a lower bound on `D(P)` for
/// every `u`.
pub fn jp_objective(problem: &Problem, p_level: f64, u: f64) -> Result<f64> {
    let uy = u_values(problem)?;
    let rho = problem.rho();
    let t = p_level / problem.metric().matrix()[(0, 1)];
    let mut total = 0.0;
    let mut f = 0.0;
    for (y, &v) in uy.iter().enumerate() {
        if v <= u + COST_TIE {
            total += rho[(0, y)];
            f += problem.p_y()[y];
        } else {
            total += rho[(1, y)];
        }
    }
    Ok(total + 2.0 * (problem.p_x()[0] - f) * u - 2.0 * t * u.abs())
}

/// `max J_P(u)` over `u in {0} U {u_y}`, which equals `D(P)`.
pub fn jp_oracle_value(problem: &Problem, p_level: f64) -> Result<f64> {
    if !p_level.is_finite() || p_level < 0.0 {
        return Err(DpError::InvalidPerception(p_level));
    }
    let mut best = jp_objective(problem, p_level, 0.0)?;
    for u in u_values(problem)? {
        best = best.max(jp_objective(problem, p_level, u)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::random_problem;
    use crate::model::{DistortionMatrix, GroundMetric, JointChannel};
    use crate::programs::{solve_dp_at, Form};
    use proptest::prelude::*;

    fn bsc() -> Problem {
        Problem::hamming(JointChannel::from_rows(&[[0.54, 0.06], [0.04, 0.36]]).unwrap()).unwrap()
    }

    fn independent() -> Problem {
        Problem::hamming(JointChannel::independent(&[0.6, 0.4], &[0.5, 0.5]).unwrap()).unwrap()
    }

    #[test]
    fn bsc_analysis() {
        let a = analyze(&bsc()).unwrap();
        assert!((a.u[0] + 0.5 * (0.54 - 0.04) / 0.58).abs() < 1e-15);
        assert!((a.u[1] - 0.5 * (0.36 - 0.06) / 0.42).abs() < 1e-15);
        assert!((a.u[0] + 0.43103).abs() < 1e-5 && (a.u[1] - 0.35714).abs() < 1e-5);
        assert_eq!(a.case, BinaryCase::X1Underallocated);
        assert_eq!(a.order, vec![0, 1]);
        assert_eq!(a.breakpoints.len(), 1);
        assert!((a.breakpoints[0] - 0.02).abs() < 1e-15);
        assert!((a.slopes[0] + 2.0 * a.u[1]).abs() < 1e-15);
        assert_eq!(a.i_max, 0);

        let c = a.curve().unwrap();
        assert!((c.value(0.0) - 0.8 / 7.0).abs() < 1e-15);
        assert!((c.value(0.01) - 0.75 / 7.0).abs() < 1e-15);
        assert_eq!(c.value(0.02), 0.1);
        assert_eq!(c.value(1.0).to_bits(), bsc().d_star().to_bits());
    }

    #[test]
    fn independent_analysis() {
        let p = independent();
        let a = analyze(&p).unwrap();
        assert!((a.u[0] + 0.1).abs() < 1e-15 && (a.u[1] + 0.1).abs() < 1e-15);
        assert_eq!(a.cdf.left_limit(0.0), 1.0);
        assert_eq!(a.case, BinaryCase::X1Overallocated);
        let c = a.curve().unwrap();
        assert_eq!(c.breakpoints().len(), 1);
        assert!((c.breakpoints()[0] - 0.4).abs() < 1e-15);
        assert!((c.value(0.0) - 0.48).abs() < 1e-15);
        assert!((c.slopes()[0] + 0.2).abs() < 1e-15);
        let est = breakpoint_estimators(&p, &a).unwrap();
        assert_eq!(est.len(), 1);
        assert_eq!(est[0].1, p.greedy_estimator());
    }

    #[test]
    fn balanced_and_noiseless_are_flat() {
        let noiseless = Problem::hamming(JointChannel::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap()).unwrap();
        let a = analyze(&noiseless).unwrap();
        assert_eq!(a.case, BinaryCase::Balanced);
        let c = a.curve().unwrap();
        assert!(c.breakpoints().is_empty());
        assert_eq!(c.value(0.0), 0.0);

        // u = (-1/2, 0, 1/2) and p_x1 = 0.5 sits inside the jump at 0
        let tied = Problem::hamming(
            JointChannel::from_rows(&[[0.3, 0.1, 0.0], [0.0, 0.1, 0.5]]).unwrap(),
        )
        .unwrap();
        let a = analyze(&tied).unwrap();
        assert_eq!(a.case, BinaryCase::Balanced);
        let q = estimator_at(&tied, &a, 0.0).unwrap();
        assert!(tied.perception(&q).unwrap() < 1e-12);
        assert!((tied.expected_distortion(&q).unwrap() - tied.d_star()).abs() < 1e-12);
    }

    #[test]
    fn non_binary_rejected() {
        let p = random_problem(1, 3, 2, false).unwrap();
        assert!(matches!(analyze(&p), Err(DpError::Unsupported(_))));
        assert!(matches!(jp_oracle_value(&p, 0.1), Err(DpError::Unsupported(_))));
    }

    #[test]
    fn bsc_estimators() {
        let p = bsc();
        let a = analyze(&p).unwrap();
        let est = breakpoint_estimators(&p, &a).unwrap();
        assert_eq!(est[0].1, Estimator::deterministic(2, &[0, 1]));
        let q0 = estimator_at(&p, &a, 0.0).unwrap();
        assert_eq!(q0.matrix()[(0, 0)], 1.0);
        assert!((q0.matrix()[(0, 1)] - 0.02 / 0.42).abs() < 1e-15);
        let out = crate::model::output_distribution(&q0, p.p_y()).unwrap();
        assert!((out.as_slice()[0] - 0.6).abs() < 1e-15);
        let mid = estimator_at(&p, &a, 0.01).unwrap();
        assert!((p.expected_distortion(&mid).unwrap() - 0.75 / 7.0).abs() < 1e-12);
        assert_eq!(estimator_at(&p, &a, a.breakpoints[0]).unwrap(), est[0].1);
    }

    #[test]
    fn jp_values() {
        let p = bsc();
        assert!((jp_objective(&p, 0.3, 0.0).unwrap() - p.d_star()).abs() < 1e-15);
        let u2 = u_values(&p).unwrap()[1];
        assert!((jp_objective(&p, 0.0, u2).unwrap() - 0.8 / 7.0).abs() < 1e-15);
        assert!((jp_oracle_value(&p, 0.01).unwrap() - 0.75 / 7.0).abs() < 1e-15);
        assert!((jp_oracle_value(&p, 0.01).unwrap() - 0.107143).abs() < 1e-6);
        assert_eq!(jp_oracle_value(&p, 1.0).unwrap(), jp_objective(&p, 1.0, 0.0).unwrap());
    }

    #[test]
    fn scaled_metric() {
        let h = GroundMetric::new(Matrix::from_rows(&[[0.0, 0.25], [0.25, 0.0]]).unwrap()).unwrap();
        let ch = JointChannel::from_rows(&[[0.54, 0.06], [0.04, 0.36]]).unwrap();
        let p = Problem::new(ch, DistortionMatrix::hamming(2), h).unwrap();
        let c = closed_form_curve(&p).unwrap();
        assert!((c.p_star() - 0.005).abs() < 1e-15);
        for k in 0..=10 {
            let x = 0.001 * k as f64;
            let lp = solve_dp_at(&p, x, Form::Ot).unwrap().value;
            assert!((c.value(x) - lp).abs() < 1e-10);
            assert!((jp_oracle_value(&p, x).unwrap() - lp).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_costs_collapse_into_one_interval() {
        // outputs 1 and 2 share u_y
        let p = Problem::hamming(
            JointChannel::from_rows(&[[0.3, 0.1, 0.1, 0.2], [0.0, 0.1, 0.1, 0.1]]).unwrap(),
        )
        .unwrap();
        let a = analyze(&p).unwrap();
        assert!((a.u[1] - a.u[2]).abs() < 1e-15);
        for w in a.slopes.windows(2) {
            assert!(w[0] < w[1]);
        }
        let c = a.curve().unwrap();
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!((c.value(x) - solve_dp_at(&p, x, Form::Ot).unwrap().value).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_matches_lp_and_jp(seed in 0u64..100_000, n_y in 2usize..=8, level in 0.0f64..1.0) {
            let p = random_problem(seed, 2, n_y, true).unwrap();
            let a = analyze(&p).unwrap();
            let c = a.curve().unwrap();
            let lp = solve_dp_at(&p, level, Form::Ot).unwrap().value;
            prop_assert!((c.value(level) - lp).abs() <= 1e-8);
            prop_assert!((jp_oracle_value(&p, level).unwrap() - c.value(level)).abs() <= 1e-10);
            let q = estimator_at(&p, &a, level).unwrap();
            prop_assert!(p.perception(&q).unwrap() <= level + 1e-9);
            prop_assert!((p.expected_distortion(&q).unwrap() - c.value(level)).abs() <= 1e-9);
        }

        #[test]
        fn breakpoints_drop_by_group_mass(seed in 0u64..100_000, n_y in 2usize..=8) {
            let p = random_problem(seed, 2, n_y, true).unwrap();
            let a = analyze(&p).unwrap();
            for (i, w) in a.breakpoints.windows(2).enumerate() {
                let level = a.levels[i];
                let mass: f64 = (0..n_y)
                    .filter(|&y| (a.oriented_u(y) - level).abs() <= COST_TIE)
                    .map(|y| p.p_y()[y])
                    .sum();
                prop_assert!((w[0] - w[1] - a.scale * mass).abs() <= 1e-12);
            }
            for (b, q) in breakpoint_estimators(&p, &a).unwrap() {
                prop_assert!(q.is_deterministic());
                prop_assert!(p.perception(&q).unwrap() <= b + 1e-10);
                prop_assert!((p.expected_distortion(&q).unwrap() - a.curve().unwrap().value(b)).abs() <= 1e-10);
            }
        }
    }
}

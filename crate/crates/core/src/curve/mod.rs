//! The whole curve `P -> D(P)` on `[0, 1]`.
//!
//! Every dual-feasible point `v` gives a line `P -> p0(v) + p1(v) P` lying
//! below `D`, and `D` is the upper envelope of the lines of the dual
//! vertices. The envelope is taken over `[0, 2]` so that a plateau starting
//! exactly at `P = 1` is still seen as a separate piece.

mod envelope;
mod hull;
mod sweep;

pub use envelope::{breakpoint_candidates, upper_envelope, EnvelopePiece};
pub use hull::hull_extremes;
pub use sweep::{curve_by_sweep, SweepOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DpError, Result};
use crate::lp::{enumerate_vertices_with, VertexOptions};
use crate::model::{Estimator, Problem};
use crate::programs::{dual_polyhedron, solve_dp_at, DualLayout, DualSolution, Form};

/// Slopes above `-PLATEAU_SLOPE` are read as the plateau.
const PLATEAU_SLOPE: f64 = 1e-9;

/// A dual point seen in the plane of its line `P -> p0 + p1 P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    /// Value of the line at `P = 0`.
    pub p0: f64,
    /// Slope, `-l`.
    pub p1: f64,
}

impl ProjectedPoint {
    pub fn at(&self, p: f64) -> f64 {
        self.p0 + self.p1 * p
    }
}

impl ProjectedPoint {
    /// Line of a dual solution obtained at perception level `p_level`.
    pub fn of_dual(dual: &DualSolution, p_level: f64) -> Self {
        Self { p0: dual.objective + dual.l * p_level, p1: -dual.l }
    }
}

/// Projection of a dual-polyhedron vertex `(w, r, nu, l)`:
/// `p0 = w . P_Y + r . P_X`, `p1 = -l`.
pub fn project_vertex(vertex: &[f64], problem: &Problem) -> Result<ProjectedPoint> {
    let lay = DualLayout { n_x: problem.n_x(), n_y: problem.n_y() };
    if vertex.len() != lay.dim() {
        return Err(DpError::DimensionMismatch {
            what: "dual vertex",
            expected: format!("length {}", lay.dim()),
            got: format!("length {}", vertex.len()),
        });
    }
    let w_part: f64 = problem.p_y().iter().enumerate().map(|(y, p)| p * vertex[lay.w(y)]).sum();
    let r_part: f64 = problem.p_x().iter().enumerate().map(|(x, p)| p * vertex[lay.r(x)]).sum();
    Ok(ProjectedPoint { p0: w_part + r_part, p1: -vertex[lay.l()] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub intercept: f64,
    pub slope: f64,
}

impl Segment {
    pub fn at(&self, p: f64) -> f64 {
        self.intercept + self.slope * p
    }
}

/// `D(P)` on `[0, inf)` as interior breakpoints and the segment active on
/// each interval. `segments.len() == breakpoints.len() + 1`; segment `i` is
/// active on `[breakpoints[i - 1], breakpoints[i]]` and the last one is the
/// plateau `(d_star, 0)` starting at `p_star`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinearDP {
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
    p_star: f64,
    d_star: f64,
}

/// Structural diagnostics of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveCheck {
    pub slopes_nonpositive: bool,
    pub slopes_nondecreasing: bool,
    pub breakpoints_increasing: bool,
    pub max_continuity_gap: f64,
    pub plateau_is_d_star: bool,
    pub p_star_in_unit_interval: bool,
}

impl CurveCheck {
    pub fn ok(&self, continuity_tol: f64) -> bool {
        self.slopes_nonpositive
            && self.slopes_nondecreasing
            && self.breakpoints_increasing
            && self.max_continuity_gap <= continuity_tol
            && self.plateau_is_d_star
            && self.p_star_in_unit_interval
    }
}

impl PiecewiseLinearDP {
    /// A constant curve.
    pub fn flat(d_star: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            segments: vec![Segment { intercept: d_star, slope: 0.0 }],
            p_star: 0.0,
            d_star,
        }
    }

    /// Builds the curve backwards from the plateau: `slopes[i]` is the slope
    /// on `[breakpoints[i - 1], breakpoints[i]]` and the curve equals
    /// `d_star` from the last breakpoint on.
    pub fn from_slopes(breakpoints: Vec<f64>, slopes: Vec<f64>, d_star: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() {
            return Err(DpError::DimensionMismatch {
                what: "curve slopes",
                expected: format!("{} slopes", breakpoints.len()),
                got: format!("{}", slopes.len()),
            });
        }
        let mut segments = vec![Segment { intercept: d_star, slope: 0.0 }];
        let mut value = d_star;
        for i in (0..breakpoints.len()).rev() {
            let slope = slopes[i];
            let intercept = value - slope * breakpoints[i];
            segments.push(Segment { intercept, slope });
            if i > 0 {
                value = intercept + slope * breakpoints[i - 1];
            }
        }
        segments.reverse();
        let p_star = breakpoints.last().copied().unwrap_or(0.0);
        Ok(Self { breakpoints, segments, p_star, d_star })
    }

    /// Upper envelope of `lines` with the plateau snapped to exactly
    /// `(d_star, 0)` and `p_star` recomputed as its crossing with the
    /// previous piece.
    pub fn from_lines(lines: &[ProjectedPoint], d_star: f64) -> Result<Self> {
        let pieces = upper_envelope(lines, 0.0, 2.0);
        let last = pieces
            .last()
            .ok_or_else(|| DpError::Internal("no dual lines to build the curve from".into()))?;
        if last.line.p1 < -PLATEAU_SLOPE {
            return Err(DpError::Internal(format!(
                "envelope ends with slope {} instead of a plateau",
                last.line.p1
            )));
        }
        let mut segments: Vec<Segment> = pieces
            .iter()
            .map(|p| Segment { intercept: p.line.p0, slope: p.line.p1 })
            .collect();
        let mut breakpoints: Vec<f64> = pieces.iter().skip(1).map(|p| p.from).collect();
        *segments.last_mut().expect("nonempty") = Segment { intercept: d_star, slope: 0.0 };
        if let Some(prev) = segments.len().checked_sub(2).map(|i| segments[i]) {
            let crossing = (d_star - prev.intercept) / prev.slope;
            let floor = breakpoints.len().checked_sub(2).map_or(0.0, |i| breakpoints[i]);
            *breakpoints.last_mut().expect("nonempty") = crossing.max(floor);
        }
        let p_star = breakpoints.last().copied().unwrap_or(0.0);
        Ok(Self { breakpoints, segments, p_star, d_star })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.slope).collect()
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn d_star(&self) -> f64 {
        self.d_star
    }

    /// Index of the segment used at `p`; at a breakpoint, the right one.
    pub fn segment_index(&self, p: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= p)
    }

    pub fn value(&self, p: f64) -> f64 {
        let p = p.max(0.0);
        self.segments[self.segment_index(p)].at(p)
    }

    /// Right derivative at `p`.
    pub fn slope(&self, p: f64) -> f64 {
        self.segments[self.segment_index(p.max(0.0))].slope
    }

    pub fn check(&self) -> CurveCheck {
        let slopes_nonpositive = self.segments.iter().all(|s| s.slope <= 0.0);
        let slopes_nondecreasing = self.segments.windows(2).all(|w| w[0].slope <= w[1].slope);
        let breakpoints_increasing =
            self.breakpoints.windows(2).all(|w| w[0] < w[1]) && self.breakpoints.iter().all(|&b| b >= 0.0);
        let max_continuity_gap = self
            .breakpoints
            .iter()
            .enumerate()
            .map(|(i, &b)| (self.segments[i].at(b) - self.segments[i + 1].at(b)).abs())
            .fold(0.0, f64::max);
        let last = self.segments.last().expect("nonempty");
        CurveCheck {
            slopes_nonpositive,
            slopes_nondecreasing,
            breakpoints_increasing,
            max_continuity_gap,
            plateau_is_d_star: last.slope == 0.0 && last.intercept == self.d_star,
            p_star_in_unit_interval: (0.0..=1.0).contains(&self.p_star),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMethod {
    Vertex,
    Sweep,
    ClosedForm,
}

/// An estimator achieving `D(p_level)` at perception `p_level`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorEstimator {
    pub p_level: f64,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    pub curve: PiecewiseLinearDP,
    pub method: CurveMethod,
    /// Projected dual points: all vertices for the vertex method, the
    /// discovered supporting lines for the sweep.
    pub s2_points: Vec<ProjectedPoint>,
    /// Indices into `s2_points` of the extreme points of their hull.
    pub hull_extremes: Vec<usize>,
    /// Optimal estimators at `P = 0` and at every breakpoint, increasing in
    /// `p_level`.
    pub estimators: Vec<AnchorEstimator>,
    /// LP solves performed.
    pub solves: usize,
}

impl CurveReport {
    /// `(intercept, slope)` of every segment as points of the `(p0, p1)`
    /// plane.
    pub fn active_points(&self) -> Vec<ProjectedPoint> {
        self.curve
            .segments()
            .iter()
            .map(|s| ProjectedPoint { p0: s.intercept, p1: s.slope })
            .collect()
    }
}

/// Solves at `P = 0` and at every breakpoint.
fn anchor_estimators(problem: &Problem, curve: &PiecewiseLinearDP) -> Result<Vec<AnchorEstimator>> {
    let mut levels = vec![0.0];
    levels.extend(curve.breakpoints().iter().copied().filter(|&b| b > 0.0));
    levels
        .par_iter()
        .map(|&p| {
            let rep = solve_dp_at(problem, p, Form::Ot)?;
            Ok(AnchorEstimator { p_level: p, estimator: rep.estimator })
        })
        .collect()
}

pub fn curve_by_vertices(problem: &Problem) -> Result<CurveReport> {
    curve_by_vertices_with(problem, &VertexOptions::default())
}

/// Enumerates the dual vertices, projects them and takes the upper envelope.
pub fn curve_by_vertices_with(problem: &Problem, opts: &VertexOptions) -> Result<CurveReport> {
    let poly = dual_polyhedron(problem);
    let vertices = enumerate_vertices_with(&poly, opts)?;
    let s2_points: Vec<ProjectedPoint> = vertices
        .iter()
        .map(|v| project_vertex(v, problem))
        .collect::<Result<_>>()?;
    let curve = PiecewiseLinearDP::from_lines(&s2_points, problem.d_star())?;
    let hull = hull_extremes(&s2_points);
    let estimators = anchor_estimators(problem, &curve)?;
    Ok(CurveReport {
        solves: estimators.len(),
        curve,
        method: CurveMethod::Vertex,
        s2_points,
        hull_extremes: hull,
        estimators,
    })
}

/// An estimator achieving `(p_level, D(p_level))`: the greedy estimator for
/// `p_level >= 1`, the last anchor from `p_star` on, otherwise the convex
/// combination of the two anchors bracketing `p_level`.
pub fn estimator_on_curve(problem: &Problem, report: &CurveReport, p_level: f64) -> Result<Estimator> {
    if !p_level.is_finite() || p_level < 0.0 {
        return Err(DpError::InvalidPerception(p_level));
    }
    if p_level >= 1.0 {
        return Ok(problem.greedy_estimator());
    }
    let anchors = &report.estimators;
    let last = anchors
        .last()
        .ok_or_else(|| DpError::Internal("curve report carries no estimators".into()))?;
    if p_level >= last.p_level {
        return Ok(last.estimator.clone());
    }
    let k = anchors.partition_point(|a| a.p_level <= p_level);
    let (a, b) = (&anchors[k - 1], &anchors[k]);
    let alpha = (b.p_level - p_level) / (b.p_level - a.p_level);
    Estimator::mix(&a.estimator, &b.estimator, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::random_problem;
    use crate::model::JointChannel;

    fn independent() -> Problem {
        Problem::hamming(JointChannel::independent(&[0.6, 0.4], &[0.5, 0.5]).unwrap()).unwrap()
    }

    #[test]
    fn from_slopes_builds_backwards() {
        let c = PiecewiseLinearDP::from_slopes(vec![0.4], vec![-0.2], 0.4).unwrap();
        assert_eq!(c.breakpoints(), &[0.4]);
        assert!((c.value(0.0) - 0.48).abs() < 1e-15);
        assert_eq!(c.value(1.0), 0.4);
        assert_eq!(c.slope(0.1), -0.2);
        assert_eq!(c.slope(0.4), 0.0);
        assert!(c.check().ok(1e-12));
    }

    #[test]
    fn lower_bound_vertex_projects_to_d_star() {
        let p = random_problem(11, 3, 4, true).unwrap();
        let lb = DualSolution::lower_bound(&p);
        let pt = project_vertex(&lb.coords(), &p).unwrap();
        assert!((pt.p0 - p.d_star()).abs() < 1e-15);
        assert_eq!(pt.p1, 0.0);
        assert!(project_vertex(&[0.0; 3], &p).is_err());
    }

    #[test]
    fn noiseless_curve_is_flat_zero() {
        let p = Problem::hamming(JointChannel::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap()).unwrap();
        let rep = curve_by_vertices(&p).unwrap();
        assert!(rep.curve.breakpoints().is_empty());
        assert_eq!(rep.curve.value(0.0), 0.0);
        assert_eq!(rep.curve.p_star(), 0.0);
    }

    #[test]
    fn independent_curve() {
        let p = independent();
        let rep = curve_by_vertices(&p).unwrap();
        let c = &rep.curve;
        assert_eq!(c.breakpoints().len(), 1);
        assert!((c.breakpoints()[0] - 0.4).abs() < 1e-9);
        assert!((c.value(0.0) - 0.48).abs() < 1e-9);
        assert!((c.slopes()[0] + 0.2).abs() < 1e-9);
        assert_eq!(c.value(1.0).to_bits(), p.d_star().to_bits());
    }

    #[test]
    fn envelope_matches_pointwise_solves() {
        let p = random_problem(7, 3, 5, true).unwrap();
        let rep = curve_by_vertices(&p).unwrap();
        assert!(rep.curve.check().ok(1e-9), "{:?}", rep.curve.check());
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            let exact = solve_dp_at(&p, x, Form::Ot).unwrap().value;
            assert!((rep.curve.value(x) - exact).abs() <= 1e-8, "P = {x}");
        }
    }

    #[test]
    fn active_points_are_hull_extremes() {
        let p = random_problem(7, 3, 5, true).unwrap();
        let rep = curve_by_vertices(&p).unwrap();
        for a in rep.active_points() {
            let near = rep.hull_extremes.iter().any(|&i| {
                let q = rep.s2_points[i];
                (q.p0 - a.p0).abs() <= 1e-9 && (q.p1 - a.p1).abs() <= 1e-9
            });
            assert!(near, "{a:?}");
        }
        let candidates = breakpoint_candidates(
            &rep.hull_extremes.iter().map(|&i| rep.s2_points[i]).collect::<Vec<_>>(),
        );
        for b in rep.curve.breakpoints() {
            assert!(candidates.iter().any(|c| (c - b).abs() <= 1e-9), "breakpoint {b}");
        }
    }

    #[test]
    fn estimators_on_curve() {
        let p = random_problem(5, 3, 4, true).unwrap();
        let rep = curve_by_vertices(&p).unwrap();
        assert_eq!(estimator_on_curve(&p, &rep, 1.0).unwrap(), p.greedy_estimator());
        for k in 0..=40 {
            let x = k as f64 / 40.0;
            let q = estimator_on_curve(&p, &rep, x).unwrap();
            assert!((p.expected_distortion(&q).unwrap() - rep.curve.value(x)).abs() <= 1e-8, "P = {x}");
            assert!(p.perception(&q).unwrap() <= x + 1e-8, "P = {x}");
        }
        for a in &rep.estimators {
            let q = estimator_on_curve(&p, &rep, a.p_level).unwrap();
            assert!(q.matrix().max_abs_diff(a.estimator.matrix()) < 1e-12 || a.p_level >= rep.curve.p_star());
        }
    }
}

use rayon::prelude::*;

use super::{anchor_estimators, hull_extremes, CurveMethod, CurveReport, PiecewiseLinearDP, ProjectedPoint};
use crate::error::{DpError, Result};
use crate::model::Problem;
use crate::programs::{solve_dp_at, Form};

/// Two tight supporting lines with slopes this close coincide.
const PARALLEL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Extra probe levels in `[0, 1]`; `0` and `1` are always probed.
    pub grid: Vec<f64>,
    /// Budget on LP solves spent locating the curve.
    pub max_solves: usize,
    pub form: Form,
    /// A probe within this of the two neighbouring supporting lines proves
    /// their crossing is the only breakpoint between them.
    pub value_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            grid: Vec::new(),
            max_solves: 256,
            form: Form::Ot,
            value_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Probe {
    p: f64,
    value: f64,
    line: ProjectedPoint,
}

fn probe(problem: &Problem, p: f64, form: Form) -> Result<Probe> {
    let rep = solve_dp_at(problem, p, form)?;
    Ok(Probe { p, value: rep.value, line: ProjectedPoint::of_dual(&rep.dual, p) })
}

fn probe_all(problem: &Problem, levels: &[f64], form: Form) -> Result<Vec<Probe>> {
    levels.par_iter().map(|&p| probe(problem, p, form)).collect()
}

/// Where to probe between two supporting lines tight at `a` and `b`, or
/// `None` when `D` is already known on `[a, b]`.
fn split_point(a: &Probe, b: &Probe) -> Option<f64> {
    let (la, lb) = (a.line, b.line);
    if (lb.p1 - la.p1).abs() <= PARALLEL {
        return None;
    }
    let x = (la.p0 - lb.p0) / (lb.p1 - la.p1);
    let margin = 1e-12 * (b.p - a.p).max(1.0);
    (x > a.p + margin && x < b.p - margin).then_some(x)
}

/// `D` on `[0, 1]` from LP solves alone.
///
/// Each solve at `P` returns a dual line tight at `P`. Between neighbouring
/// probes `a < b` with lines `La`, `Lb`, the crossing `x` is probed: if
/// `D(x) = max(La(x), Lb(x))` then by convexity `D = max(La, Lb)` on
/// `[a, b]` and `x` is the only breakpoint there; otherwise both halves are
/// refined. Breakpoints are therefore exact, not bisected.
pub fn curve_by_sweep(problem: &Problem, opts: &SweepOptions) -> Result<CurveReport> {
    for &g in &opts.grid {
        if !(0.0..=1.0).contains(&g) {
            return Err(DpError::InvalidPerception(g));
        }
    }
    let mut seeds: Vec<f64> = opts.grid.iter().copied().chain([0.0, 1.0]).collect();
    seeds.sort_by(f64::total_cmp);
    seeds.dedup();
    if seeds.len() > opts.max_solves {
        return Err(DpError::BudgetExceeded(format!(
            "{} seed levels exceed the sweep budget of {} solves",
            seeds.len(),
            opts.max_solves
        )));
    }
    let mut probes = probe_all(problem, &seeds, opts.form)?;
    let mut solves = probes.len();
    let mut pending: Vec<(usize, usize)> = (1..probes.len()).map(|i| (i - 1, i)).collect();

    while !pending.is_empty() {
        let splits: Vec<(usize, usize, f64)> = pending
            .iter()
            .filter_map(|&(a, b)| split_point(&probes[a], &probes[b]).map(|x| (a, b, x)))
            .collect();
        if splits.is_empty() {
            break;
        }
        if solves + splits.len() > opts.max_solves {
            return Err(DpError::BudgetExceeded(format!(
                "sweep needs more than {} LP solves; raise the budget",
                opts.max_solves
            )));
        }
        let xs: Vec<f64> = splits.iter().map(|s| s.2).collect();
        let fresh = probe_all(problem, &xs, opts.form)?;
        solves += fresh.len();
        pending.clear();
        for ((a, b, _), pr) in splits.into_iter().zip(fresh) {
            let lower = probes[a].line.at(pr.p).max(probes[b].line.at(pr.p));
            let idx = probes.len();
            probes.push(pr);
            if pr.value > lower + opts.value_tol {
                pending.push((a, idx));
                pending.push((idx, b));
            }
        }
    }

    let s2_points: Vec<ProjectedPoint> = probes.iter().map(|p| p.line).collect();
    let curve = PiecewiseLinearDP::from_lines(&s2_points, problem.d_star())?;
    let estimators = anchor_estimators(problem, &curve)?;
    solves += estimators.len();
    let hull = hull_extremes(&s2_points);
    debug_assert!(probes.iter().all(|p| p.value.is_finite()));
    Ok(CurveReport {
        curve,
        method: CurveMethod::Sweep,
        s2_points,
        hull_extremes: hull,
        estimators,
        solves,
    })
}

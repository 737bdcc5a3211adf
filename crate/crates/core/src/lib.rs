//! Distortion-perception functions of finite-alphabet channels.
//!
//! `D(P)` is the least expected distortion of an estimator whose output law
//! lies within Wasserstein-1 distance `P` of the source law. It is convex,
//! non-increasing and piecewise linear, reaching the plateau `D*` at some
//! `P* <= 1`. This crate computes it pointwise by linear programming, as a
//! whole curve from the vertices of the dual feasible set or from an LP
//! sweep, and in closed form for binary sources.

pub mod binary;
pub mod curve;
pub mod error;
pub mod instance;
pub mod lp;
pub mod matrix;
pub mod model;
pub mod programs;
pub mod tol;
pub mod verify;

pub use error::{DpError, LpError, Result};
pub use matrix::Matrix;
pub use model::{
    d_star, expected_distortion, output_distribution, posterior_sampling, rho, rho_prime, tv_distance,
    validate_problem, wasserstein1, Coupling, DistortionMatrix, Distribution, Estimator, GroundMetric,
    JointChannel, Problem,
};
pub use tol::Tolerances;
pub use programs::{
    build_ot_form, build_tv_form, dual_polyhedron, solve_dp_at, DualLayout, DualSolution, Form, OtFormLayout,
    SolveReport, TvFormLayout,
};
pub use curve::{
    breakpoint_candidates, curve_by_sweep, curve_by_vertices, estimator_on_curve, hull_extremes, project_vertex,
    CurveMethod, CurveReport, PiecewiseLinearDP, ProjectedPoint, Segment, SweepOptions,
};
pub use binary::{
    analyze, breakpoint_estimators, closed_form_curve, closed_form_report, estimator_at, jp_objective,
    jp_oracle_value, BinaryAnalysis, BinaryCase, StepCdf,
};
pub use verify::{cross_verify, grid_oracle, GridOracle, VerifyOptions, VerifyReport};

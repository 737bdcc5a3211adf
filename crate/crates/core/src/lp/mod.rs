//! Linear programming: a dense two-phase simplex for equality standard form
//! and brute-force vertex enumeration for small H-polyhedra.

mod simplex;
mod vertices;

pub use simplex::{dual_check, solve, solve_with, DualCheck, LpSolution, LpStatus, PivotRule, SimplexOptions};
pub use vertices::{enumerate_vertices, enumerate_vertices_with, n_choose_k, VertexOptions};

use crate::error::LpError;
use crate::matrix::Matrix;

/// `min c^T x  s.t.  A x = b, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLp {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl StandardLp {
    pub fn new(a: Matrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self, LpError> {
        let lp = Self { a, b, c };
        lp.check()?;
        Ok(lp)
    }

    pub fn n_rows(&self) -> usize {
        self.a.rows()
    }

    pub fn n_vars(&self) -> usize {
        self.a.cols()
    }

    pub(crate) fn check(&self) -> Result<(), LpError> {
        if self.b.len() != self.a.rows() {
            return Err(LpError::Shape(format!(
                "A has {} rows but b has length {}",
                self.a.rows(),
                self.b.len()
            )));
        }
        if self.c.len() != self.a.cols() {
            return Err(LpError::Shape(format!(
                "A has {} columns but c has length {}",
                self.a.cols(),
                self.c.len()
            )));
        }
        if !self.a.as_slice().iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("A"));
        }
        if !self.b.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("b"));
        }
        if !self.c.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("c"));
        }
        Ok(())
    }

    /// `max_i |(A x - b)_i|`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        self.a
            .mul_vec(x)
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `{p in R^d : G p <= h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolyhedron {
    pub g: Matrix,
    pub h: Vec<f64>,
}

impl HPolyhedron {
    pub fn new(g: Matrix, h: Vec<f64>) -> Result<Self, LpError> {
        if g.rows() != h.len() {
            return Err(LpError::Shape(format!(
                "G has {} rows but h has length {}",
                g.rows(),
                h.len()
            )));
        }
        if g.cols() == 0 {
            return Err(LpError::Shape("polyhedron dimension must be at least 1".into()));
        }
        if !g.as_slice().iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("G"));
        }
        if !h.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("h"));
        }
        Ok(Self { g, h })
    }

    pub fn dim(&self) -> usize {
        self.g.cols()
    }

    pub fn n_constraints(&self) -> usize {
        self.g.rows()
    }

    /// Slack `h_i - g_i . p` per row; negative means violated.
    pub fn slacks(&self, p: &[f64]) -> Vec<f64> {
        self.g
            .mul_vec(p)
            .iter()
            .zip(&self.h)
            .map(|(gp, h)| h - gp)
            .collect()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.slacks(p).iter().all(|&s| s >= -tol)
    }

    pub fn active_count(&self, p: &[f64], tol: f64) -> usize {
        self.slacks(p).iter().filter(|s| s.abs() <= tol).count()
    }
}

use rayon::prelude::*;

use super::HPolyhedron;
use crate::error::{DpError, Result};
use crate::tol::{PIVOT_EPS, VERTEX_DEDUP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexOptions {
    /// Upper bound on `C(k, d)`, the number of candidate row subsets.
    pub max_subsets: u128,
    pub max_dim: usize,
    /// A candidate must satisfy every inequality within this.
    pub feasibility_tol: f64,
    /// Candidates within this Euclidean distance are merged.
    pub dedup_tol: f64,
}

impl Default for VertexOptions {
    fn default() -> Self {
        Self {
            max_subsets: 10_000_000,
            max_dim: 16,
            feasibility_tol: 1e-9,
            dedup_tol: VERTEX_DEDUP,
        }
    }
}

pub fn n_choose_k(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn enumerate_vertices(poly: &HPolyhedron) -> Result<Vec<Vec<f64>>> {
    enumerate_vertices_with(poly, &VertexOptions::default())
}

/// All vertices of a pointed polyhedron, sorted lexicographically.
///
/// Every `d`-subset of rows with a nonsingular system is solved and kept if
/// it satisfies all rows. Subsets are walked depth-first while keeping the
/// chosen rows in reduced row-echelon form, so a dependent prefix prunes its
/// whole subtree. Degenerate vertices are reached from several bases and
/// merged afterwards.
pub fn enumerate_vertices_with(poly: &HPolyhedron, opts: &VertexOptions) -> Result<Vec<Vec<f64>>> {
    let d = poly.dim();
    let k = poly.n_constraints();
    if d > opts.max_dim {
        return Err(DpError::BudgetExceeded(format!(
            "vertex enumeration in dimension {d} exceeds the limit of {}",
            opts.max_dim
        )));
    }
    let subsets = n_choose_k(k, d);
    if subsets > opts.max_subsets {
        return Err(DpError::BudgetExceeded(format!(
            "C({k}, {d}) = {subsets} candidate bases exceeds the budget of {}",
            opts.max_subsets
        )));
    }
    if k < d {
        return Ok(Vec::new());
    }

    let raw: Vec<Vec<f64>> = (0..=k - d)
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut walker = Walker::new(poly, opts.feasibility_tol);
            walker.push_from(first);
            dedup_sorted(walker.found, opts.dedup_tol)
        })
        .collect();
    Ok(dedup_sorted(raw, opts.dedup_tol))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn dedup_sorted(mut points: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    points.sort_by(|a, b| lex_cmp(a, b));
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        let duplicate = kept
            .iter()
            .rev()
            .take_while(|q| p[0] - q[0] <= tol)
            .any(|q| dist2(&p, q) <= tol * tol);
        if !duplicate {
            kept.push(p);
        }
    }
    kept
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Depth-first walk over row subsets. `levels[t]` holds the reduced
/// row-echelon form of the first `t` chosen rows (each row `d + 1` wide,
/// right-hand side last) and `pivots[t]` their pivot columns.
struct Walker<'a> {
    poly: &'a HPolyhedron,
    d: usize,
    tol: f64,
    levels: Vec<Vec<f64>>,
    pivots: Vec<Vec<usize>>,
    found: Vec<Vec<f64>>,
}

impl<'a> Walker<'a> {
    fn new(poly: &'a HPolyhedron, tol: f64) -> Self {
        let d = poly.dim();
        Self {
            poly,
            d,
            tol,
            levels: (0..=d).map(|_| vec![0.0; d * (d + 1)]).collect(),
            pivots: (0..=d).map(|_| Vec::with_capacity(d)).collect(),
            found: Vec::new(),
        }
    }

    fn push_from(&mut self, first: usize) {
        if self.extend(0, first) {
            self.descend(1, first + 1);
        }
    }

    fn descend(&mut self, depth: usize, start: usize) {
        if depth == self.d {
            self.emit();
            return;
        }
        let k = self.poly.n_constraints();
        let remaining = self.d - depth;
        for row in start..=k - remaining {
            if self.extend(depth, row) {
                self.descend(depth + 1, row + 1);
            }
        }
    }

    /// Adds `row` to the echelon form at `depth`, writing level `depth + 1`.
    /// Returns false when the row is dependent on the ones already chosen.
    fn extend(&mut self, depth: usize, row: usize) -> bool {
        let d = self.d;
        let w = d + 1;
        let mut v: Vec<f64> = Vec::with_capacity(w);
        v.extend_from_slice(self.poly.g.row(row));
        v.push(self.poly.h[row]);

        let (lower, upper) = self.levels.split_at_mut(depth + 1);
        let cur = &lower[depth];
        let next = &mut upper[0];
        let piv = &self.pivots[depth];
        for (t, &pc) in piv.iter().enumerate() {
            let f = v[pc];
            if f != 0.0 {
                let e = &cur[t * w..(t + 1) * w];
                for j in 0..w {
                    v[j] -= f * e[j];
                }
            }
        }
        let mut best = (usize::MAX, 0.0f64);
        for j in 0..d {
            if piv.contains(&j) {
                continue;
            }
            let a = v[j].abs();
            if a > best.1 {
                best = (j, a);
            }
        }
        if best.1 < PIVOT_EPS {
            return false;
        }
        let pc = best.0;
        let p = v[pc];
        v.iter_mut().for_each(|x| *x /= p);
        v[pc] = 1.0;

        next[..depth * w].copy_from_slice(&cur[..depth * w]);
        for t in 0..depth {
            let e = &mut next[t * w..(t + 1) * w];
            let f = e[pc];
            if f != 0.0 {
                for j in 0..w {
                    e[j] -= f * v[j];
                }
                e[pc] = 0.0;
            }
        }
        next[depth * w..(depth + 1) * w].copy_from_slice(&v);
        let mut new_piv = self.pivots[depth].clone();
        new_piv.push(pc);
        self.pivots[depth + 1] = new_piv;
        true
    }

    fn emit(&mut self) {
        let d = self.d;
        let w = d + 1;
        let level = &self.levels[d];
        let mut point = vec![0.0; d];
        for (t, &pc) in self.pivots[d].iter().enumerate() {
            point[pc] = level[t * w + d];
        }
        if point.iter().all(|v| v.is_finite()) && self.poly.contains(&point, self.tol) {
            self.found.push(point);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn poly(g: &[&[f64]], h: &[f64]) -> HPolyhedron {
        HPolyhedron::new(Matrix::from_rows(g).unwrap(), h.to_vec()).unwrap()
    }

    #[test]
    fn unit_square() {
        let p = poly(
            &[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]],
            &[1.0, 1.0, 1.0, 1.0],
        );
        let v = enumerate_vertices(&p).unwrap();
        assert_eq!(
            v,
            vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn triangle() {
        let p = poly(&[&[-1.0, 0.0], &[0.0, -1.0], &[1.0, 1.0]], &[0.0, 0.0, 1.0]);
        let v = enumerate_vertices(&p).unwrap();
        assert_eq!(v.len(), 3);
        for expected in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
            assert!(v.iter().any(|p| dist2(p, &expected) < 1e-20), "{expected:?} missing from {v:?}");
        }
    }

    #[test]
    fn degenerate_apex_is_reported_once() {
        // square pyramid: apex has four active facets in dimension three
        let p = poly(
            &[
                &[0.0, 0.0, -1.0],
                &[1.0, 0.0, 1.0],
                &[-1.0, 0.0, 1.0],
                &[0.0, 1.0, 1.0],
                &[0.0, -1.0, 1.0],
            ],
            &[0.0, 1.0, 1.0, 1.0, 1.0],
        );
        let v = enumerate_vertices(&p).unwrap();
        assert_eq!(v.len(), 5);
        assert!(v.iter().any(|p| dist2(p, &[0.0, 0.0, 1.0]) < 1e-20));
    }

    #[test]
    fn empty_polyhedron_has_no_vertices() {
        let p = poly(&[&[1.0], &[-1.0]], &[-1.0, -1.0]);
        assert!(enumerate_vertices(&p).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let g = Matrix::from_fn(30, 12, |r, c| if r % 12 == c { 1.0 } else { 0.0 });
        let p = HPolyhedron::new(g, vec![1.0; 30]).unwrap();
        assert!(matches!(enumerate_vertices(&p), Err(DpError::BudgetExceeded(_))));
    }

    #[test]
    fn binomial() {
        assert_eq!(n_choose_k(25, 11), 4_457_400);
        assert_eq!(n_choose_k(9, 6), 84);
        assert_eq!(n_choose_k(3, 5), 0);
    }
}

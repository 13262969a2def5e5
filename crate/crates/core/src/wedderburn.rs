//! Wedderburn rank-one reduction.
//!
//! A single step subtracts `w^{-1} C x y^T C` from `C` where `w = y^T C x`
//! is a nonzero pivot; the rank drops by exactly one. Chaining `rank(C)`
//! steps decomposes the matrix into a sum of rank-one terms.

use nalgebra::DVector;

use crate::error::Error;
use crate::matrix::{Matrix, Tolerance};

/// One recorded rank-one update `W = w^{-1} C x y^T C`.
#[derive(Debug, Clone)]
pub struct RankOneUpdate {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub w: f64,
    pub w_matrix: Matrix,
}

/// A full rank-reducing process: `original = sum of W_k + residual`, with
/// the rank dropping by one per recorded update.
#[derive(Debug, Clone)]
pub struct DecompositionTrail {
    pub updates: Vec<RankOneUpdate>,
    pub residual: Matrix,
}

impl DecompositionTrail {
    /// Reassembles the sum of the recorded rank-one terms.
    pub fn sum_of_updates(&self) -> Matrix {
        let mut acc = self.residual.inner().clone() * 0.0;
        for u in &self.updates {
            acc += u.w_matrix.inner();
        }
        Matrix::wrap(acc)
    }
}

/// Scale-invariant pivot acceptance: `|w| > rank_tol * ||C||_F * ||x|| * ||y||`.
fn pivot_ok(w: f64, c: &Matrix, x: &DVector<f64>, y: &DVector<f64>, tol: &Tolerance) -> bool {
    let scale = c.inner().norm() * x.norm() * y.norm();
    w.abs() > tol.rank_rel(c.rows(), c.cols()) * scale && w != 0.0
}

/// One Wedderburn step: returns `C2 = C - w^{-1} C x y^T C` together with
/// the recorded update. The rank of `C2` is exactly `rank(C) - 1`.
pub fn wedderburn_step(
    c: &Matrix,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: &Tolerance,
) -> Result<(Matrix, RankOneUpdate), Error> {
    if x.len() != c.cols() || y.len() != c.rows() {
        return Err(Error::Shape(format!(
            "probe lengths ({}, {}) do not match matrix shape {}x{}",
            x.len(),
            y.len(),
            c.rows(),
            c.cols()
        )));
    }
    let cx = c.inner() * x;
    let ytc = (c.inner().transpose() * y).transpose();
    let w = y.dot(&cx);
    if !pivot_ok(w, c, x, y, tol) {
        return Err(Error::ZeroPivot);
    }
    let w_mat = (&cx * &ytc) / w;
    let c2 = c.inner() - &w_mat;
    Ok((
        Matrix::wrap(c2),
        RankOneUpdate { x: x.clone(), y: y.clone(), w, w_matrix: Matrix::wrap(w_mat) },
    ))
}

/// Coordinate probe vectors `e_j`, `e_i` selecting the column and row of
/// the largest-magnitude entry (ties broken by lowest index). For any
/// nonzero matrix this pivot satisfies `w = M[i][j] != 0`, so the pair is
/// always valid.
pub fn default_probes(m: &Matrix, _tol: &Tolerance) -> Result<(DVector<f64>, DVector<f64>), Error> {
    let (mut bi, mut bj, mut best) = (0usize, 0usize, 0.0f64);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m[(i, j)].abs();
            if v > best {
                (bi, bj, best) = (i, j, v);
            }
        }
    }
    if best == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut x = DVector::zeros(m.cols());
    x[bj] = 1.0;
    let mut y = DVector::zeros(m.rows());
    y[bi] = 1.0;
    Ok((x, y))
}

/// Runs `rank(C)` Wedderburn steps using the supplied probe strategy and
/// records the trail. The residual after the last step is numerically zero.
pub fn rank_reducing_process<F>(
    c: &Matrix,
    mut probe_strategy: F,
    tol: &Tolerance,
) -> Result<DecompositionTrail, Error>
where
    F: FnMut(&Matrix, &Tolerance) -> Result<(DVector<f64>, DVector<f64>), Error>,
{
    let r = c.rank(tol);
    if r == 0 {
        return Err(Error::ZeroMatrix);
    }
    let mut cur = c.clone();
    let mut updates = Vec::with_capacity(r);
    for _ in 0..r {
        let (x, y) = probe_strategy(&cur, tol)?;
        let (next, update) = wedderburn_step(&cur, &x, &y, tol)?;
        updates.push(update);
        cur = next;
    }
    Ok(DecompositionTrail { updates, residual: cur })
}

/// Column-span preservation predicate: `z` stays representable through a
/// Wedderburn step with first probe `x1` iff `z` lies in the column span
/// of `C^T` and is orthogonal to `x1`.
pub fn span_preserved(c: &Matrix, x1: &DVector<f64>, z: &DVector<f64>, tol: &Tolerance) -> bool {
    assert_eq!(x1.len(), c.cols(), "x1 length must equal column count");
    assert_eq!(z.len(), c.cols(), "z length must equal column count");
    let ortho = z.dot(x1).abs() <= tol.residual_tol * (1.0 + z.norm() * x1.norm());
    ortho && c.transpose().in_column_span(z, tol)
}

//! Dense real-matrix kernels with explicit tolerance contracts.
//!
//! Everything downstream (pencil decompositions, rank-one reductions, the
//! game pipeline) funnels its numerical-rank questions through this module
//! so that one tolerance convention governs the whole artifact.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Dense real matrix with finite entries, row-major construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl Matrix {
    /// Builds a matrix from rows, rejecting ragged shapes, empty dimensions
    /// and non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Shape("matrix must have at least one row and column".into()));
        }
        let ncols = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Shape(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    ncols
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(Matrix(DMatrix::from_row_slice(rows.len(), ncols, &flat)))
    }

    /// Wraps an owned nalgebra matrix, validating finiteness.
    pub fn new(inner: DMatrix<f64>) -> Result<Self, Error> {
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                if !inner[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Matrix(inner))
    }

    /// Internal constructor for values produced by our own arithmetic.
    pub(crate) fn wrap(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.iter().all(|v| v.is_finite()));
        Matrix(inner)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Matrix(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Matrix {
        Matrix(self.0.transpose())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// Numerical rank: count of singular values above the tolerance
    /// threshold relative to the largest one.
    pub fn rank(&self, tol: &Tolerance) -> usize {
        numeric_rank(&self.0, tol)
    }

    /// Numerical rank judged against an external scale: singular values are
    /// compared to `tol x max(sigma_max, scale)`. Needed when this matrix is
    /// a difference of quantities of magnitude `scale` (e.g. the payoff sum
    /// of a nearly zero-sum game), where residue at `eps x scale` must not
    /// register as rank.
    pub fn rank_scaled(&self, scale: f64, tol: &Tolerance) -> usize {
        let sv = svd_robust(&self.0).singular_values;
        let smax = sv.max().max(scale.abs());
        if smax == 0.0 {
            return 0;
        }
        let thr = tol.rank_rel(self.rows(), self.cols()) * smax;
        sv.iter().filter(|&&s| s > thr).count()
    }

    /// Minimum-norm solution of `M x = b` when consistent, `None` otherwise.
    pub fn solve(&self, b: &DVector<f64>, tol: &Tolerance) -> Option<DVector<f64>> {
        assert_eq!(b.len(), self.rows(), "rhs length must equal row count");
        let x = min_norm_solve(&self.0, b, tol);
        let residual = (&self.0 * &x - b).norm();
        if residual <= tol.residual_tol * (1.0 + b.norm()) {
            Some(x)
        } else {
            None
        }
    }

    /// Augmented-rank membership test: `z` in the column span of `M`.
    pub fn in_column_span(&self, z: &DVector<f64>, tol: &Tolerance) -> bool {
        assert_eq!(z.len(), self.rows(), "vector length must equal row count");
        let mut aug = DMatrix::zeros(self.rows(), self.cols() + 1);
        aug.view_mut((0, 0), (self.rows(), self.cols())).copy_from(&self.0);
        aug.view_mut((0, self.cols()), (self.rows(), 1)).copy_from(z);
        numeric_rank(&aug, tol) == numeric_rank(&self.0, tol)
    }

    /// Orthonormal basis of the (right) null space; `cols - rank` vectors.
    pub fn nullspace_basis(&self, tol: &Tolerance) -> Vec<DVector<f64>> {
        nullspace(&self.0, tol)
    }

    /// Eigenvalues of the pencil `M + lambda I`, i.e. the negated standard
    /// eigenvalues of `M`, with algebraic multiplicity.
    pub fn eigenvalues(&self) -> Result<Vec<Complex<f64>>, Error> {
        if self.rows() != self.cols() {
            return Err(Error::Shape(format!(
                "eigenvalues need a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let n = self.rows();
        if n == 0 {
            return Ok(Vec::new());
        }
        Ok(schur_eigenvalues(&self.0)?.iter().map(|mu| -mu).collect())
    }

    /// Row echelon form via complete pivoting, with accumulated transforms.
    pub fn row_echelon_with_transforms(&self, tol: &Tolerance) -> EchelonResult {
        let (reduced, left, right, pivots) = row_echelon_complete(&self.0, tol);
        EchelonResult {
            reduced: Matrix::wrap(reduced),
            left_transform: Matrix::wrap(left),
            right_transform: Matrix::wrap(right),
            pivot_count: pivots,
        }
    }

    /// Column echelon form via complete pivoting, with accumulated transforms.
    pub fn column_echelon_with_transforms(&self, tol: &Tolerance) -> EchelonResult {
        let (reduced, left, right, pivots) = row_echelon_complete(&self.0.transpose(), tol);
        EchelonResult {
            reduced: Matrix::wrap(reduced.transpose()),
            left_transform: Matrix::wrap(right.transpose()),
            right_transform: Matrix::wrap(left.transpose()),
            pivot_count: pivots,
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(D::Error::custom)
    }
}


/// Complex eigenvalues via the real Schur form. nalgebra's QR iteration can
/// stall at machine-epsilon tolerance on matrices with repeated eigenvalues,
/// so the convergence threshold is widened stepwise before giving up; the
/// looser steps are still far below the crate's eigenvalue tolerances.
pub(crate) fn schur_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, Error> {
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), eps, 100_000) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::EigenConvergence)
}

/// Numerical tolerances threaded through every rank-sensitive operation.
///
/// `rank_tol` is relative to the largest singular value (or pivot); a value
/// of zero selects the `max(rows, cols) * machine-epsilon` convention per
/// matrix. `eig_tol` bounds realness/positivity tests on eigenvalues and
/// `residual_tol` is the linear-solve acceptance threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rank_tol: f64,
    pub eig_tol: f64,
    pub residual_tol: f64,
}

impl Tolerance {
    pub fn new(rank_tol: f64, eig_tol: f64, residual_tol: f64) -> Result<Self, Error> {
        for (name, v) in [("rank_tol", rank_tol), ("eig_tol", eig_tol), ("residual_tol", residual_tol)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Tolerance(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        Ok(Tolerance { rank_tol, eig_tol, residual_tol })
    }

    /// Looser preset for multi-stage pipelines (pencil reduction followed by
    /// rank-one updates), where accumulated transforms leave residues well
    /// above machine epsilon.
    pub fn relaxed() -> Self {
        Tolerance { rank_tol: 1e-9, eig_tol: 1e-8, residual_tol: 1e-8 }
    }

    /// Effective relative rank threshold for a matrix of the given shape.
    pub(crate) fn rank_rel(&self, rows: usize, cols: usize) -> f64 {
        if self.rank_tol == 0.0 {
            rows.max(cols) as f64 * f64::EPSILON
        } else {
            self.rank_tol
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        // rank_tol = 0 selects max(rows, cols) * eps per matrix.
        Tolerance { rank_tol: 0.0, eig_tol: 1e-9, residual_tol: 1e-9 }
    }
}

/// Echelon reduction output: `left_transform * original * right_transform`
/// reproduces `reduced`; both transforms are nonsingular.
#[derive(Debug, Clone)]
pub struct EchelonResult {
    pub reduced: Matrix,
    pub left_transform: Matrix,
    pub right_transform: Matrix,
    pub pivot_count: usize,
}

/// Thin singular value decomposition `M = U diag(s) V^T` with `U` of shape
/// `rows x k`, `V^T` of shape `k x cols`, `k = min(rows, cols)`.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

/// One-sided Jacobi SVD. Slower than bidiagonalization-based methods but
/// unconditionally reliable, including on exactly rank-deficient inputs
/// where the iterative eigensolver route can return inconsistent factors.
/// Columns of `U` paired with zero singular values are left as zero.
pub(crate) fn svd_robust(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows < cols {
        let sv = svd_robust(&m.transpose());
        return Svd {
            u: sv.v_t.transpose(),
            singular_values: sv.singular_values,
            v_t: sv.u.transpose(),
        };
    }
    let mut w = m.clone();
    let mut v = DMatrix::identity(cols, cols);
    for _ in 0..60 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let wp = w.column(p).clone_owned();
                let wq = w.column(q).clone_owned();
                let a = wp.norm_squared();
                let b = wq.norm_squared();
                let c = wp.dot(&wq);
                if a == 0.0 || b == 0.0 {
                    continue;
                }
                let rel = c.abs() / (a.sqrt() * b.sqrt());
                off = off.max(rel);
                if rel <= 1e-15 {
                    continue;
                }
                let zeta = (b - a) / (2.0 * c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let (wp_i, wq_i) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = cs * wp_i - sn * wq_i;
                    w[(i, q)] = sn * wp_i + cs * wq_i;
                }
                for i in 0..cols {
                    let (vp_i, vq_i) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cs * vp_i - sn * vq_i;
                    v[(i, q)] = sn * vp_i + cs * vq_i;
                }
            }
        }
        if off <= 1e-15 {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = DMatrix::zeros(rows, cols);
    let mut s = DVector::zeros(cols);
    let mut v_t = DMatrix::zeros(cols, cols);
    for (slot, &j) in order.iter().enumerate() {
        s[slot] = norms[j];
        if norms[j] > 0.0 {
            u.set_column(slot, &(w.column(j) / norms[j]));
        }
        v_t.set_row(slot, &v.column(j).transpose());
    }
    Svd { u, singular_values: s, v_t }
}

pub(crate) fn numeric_rank(m: &DMatrix<f64>, tol: &Tolerance) -> usize {
    let sv = svd_robust(m).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let thr = tol.rank_rel(m.nrows(), m.ncols()) * smax;
    sv.iter().filter(|&&s| s > thr).count()
}

/// Minimum-norm least-squares solution through the SVD pseudoinverse.
fn min_norm_solve(m: &DMatrix<f64>, b: &DVector<f64>, tol: &Tolerance) -> DVector<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    // Pad to at least square so the thin SVD carries a full right basis.
    let (mp, bp) = if rows < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        let mut bpad = DVector::zeros(cols);
        bpad.view_mut((0, 0), (rows, 1)).copy_from(b);
        (padded, bpad)
    } else {
        (m.clone(), b.clone())
    };
    let svd = svd_robust(&mp);
    let smax = svd.singular_values.max();
    let thr = tol.rank_rel(rows, cols) * smax;
    let mut coeffs = DVector::zeros(svd.singular_values.len());
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        if s > thr && smax > 0.0 {
            coeffs[i] = svd.u.column(i).dot(&bp) / s;
        }
    }
    svd.v_t.transpose() * coeffs
}

fn nullspace(m: &DMatrix<f64>, tol: &Tolerance) -> Vec<DVector<f64>> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mp = if rows < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = svd_robust(&mp);
    let smax = svd.singular_values.max();
    let thr = tol.rank_rel(rows, cols) * smax;
    let mut basis = Vec::new();
    for i in 0..svd.singular_values.len() {
        if smax == 0.0 || svd.singular_values[i] <= thr {
            basis.push(svd.v_t.row(i).transpose());
        }
    }
    basis
}

/// Row echelon with complete pivoting: the largest-magnitude entry of the
/// active block is moved to the pivot position at each step.
fn row_echelon_complete(
    m: &DMatrix<f64>,
    tol: &Tolerance,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, usize) {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut left = DMatrix::identity(rows, rows);
    let mut right = DMatrix::identity(cols, cols);
    let scale = a.amax();
    let thr = tol.rank_rel(rows, cols) * scale;
    let mut pivots = 0;
    for k in 0..rows.min(cols) {
        let (mut pi, mut pj, mut pmax) = (k, k, 0.0f64);
        for j in k..cols {
            for i in k..rows {
                let v = a[(i, j)].abs();
                if v > pmax {
                    (pi, pj, pmax) = (i, j, v);
                }
            }
        }
        if pmax <= thr || pmax == 0.0 {
            break;
        }
        a.swap_rows(k, pi);
        left.swap_rows(k, pi);
        a.swap_columns(k, pj);
        right.swap_columns(k, pj);
        for i in k + 1..rows {
            let f = a[(i, k)] / a[(k, k)];
            if f != 0.0 {
                for j in k..cols {
                    let delta = f * a[(k, j)];
                    a[(i, j)] -= delta;
                }
                for j in 0..rows {
                    let delta = f * left[(k, j)];
                    left[(i, j)] -= delta;
                }
            }
            a[(i, k)] = 0.0;
        }
        pivots += 1;
    }
    // Sub-threshold residue below the pivot block is noise; clear it so the
    // result is an exact echelon pattern.
    for i in pivots..rows {
        for j in 0..cols {
            a[(i, j)] = 0.0;
        }
    }
    (a, left, right, pivots)
}

/// Full rank normal form: nonsingular `S`, `T` with
/// `S * M * T = [[I_r, 0], [0, 0]]`. Backbone of the pencil stage-1 step.
/// `floor` is an external magnitude scale (e.g. of an enclosing matrix when
/// `m` is a sub-block): entries below `tol x max(amax, floor)` are treated
/// as zero, so a block of pure cancellation residue gets rank 0.
pub(crate) fn rank_normal_form(
    m: &DMatrix<f64>,
    tol: &Tolerance,
    floor: f64,
) -> (DMatrix<f64>, DMatrix<f64>, usize) {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut left = DMatrix::identity(rows, rows);
    let mut right = DMatrix::identity(cols, cols);
    let scale = a.amax().max(floor);
    let thr = tol.rank_rel(rows, cols) * scale;
    let mut r = 0;
    for k in 0..rows.min(cols) {
        let (mut pi, mut pj, mut pmax) = (k, k, 0.0f64);
        for j in k..cols {
            for i in k..rows {
                let v = a[(i, j)].abs();
                if v > pmax {
                    (pi, pj, pmax) = (i, j, v);
                }
            }
        }
        if pmax <= thr || pmax == 0.0 {
            break;
        }
        a.swap_rows(k, pi);
        left.swap_rows(k, pi);
        a.swap_columns(k, pj);
        right.swap_columns(k, pj);
        // Scale the pivot row to 1.
        let p = a[(k, k)];
        for j in 0..cols {
            a[(k, j)] /= p;
        }
        for j in 0..rows {
            left[(k, j)] /= p;
        }
        // Eliminate the rest of the pivot column (above and below).
        for i in 0..rows {
            if i == k {
                continue;
            }
            let f = a[(i, k)];
            if f != 0.0 {
                for j in 0..cols {
                    let delta = f * a[(k, j)];
                    a[(i, j)] -= delta;
                }
                for j in 0..rows {
                    let delta = f * left[(k, j)];
                    left[(i, j)] -= delta;
                }
                a[(i, k)] = 0.0;
            }
        }
        r += 1;
    }
    // Eliminate the remaining entries of each pivot row via column ops.
    for k in 0..r {
        for j in r..cols {
            let f = a[(k, j)];
            if f != 0.0 {
                for i in 0..rows {
                    let delta = f * a[(i, k)];
                    a[(i, j)] -= delta;
                }
                for i in 0..cols {
                    let delta = f * right[(i, k)];
                    right[(i, j)] -= delta;
                }
            }
        }
    }
    // Snap to the exact pattern; everything left is below threshold.
    for i in 0..rows {
        for j in 0..cols {
            a[(i, j)] = if i == j && i < r { 1.0 } else { 0.0 };
        }
    }
    (left, right, r)
}

/// Column echelon using column operations only (no row operations), as the
/// pencil stage-1 step requires for blocks whose rows are shared with the
/// identity part of the B-image. Returns `W` (nonsingular) and `t` with
/// `M * W = [E | 0]`, `E` in column echelon form of full column rank `t`.
pub(crate) fn col_echelon_colops(
    m: &DMatrix<f64>,
    tol: &Tolerance,
    floor: f64,
) -> (DMatrix<f64>, usize) {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut w = DMatrix::identity(cols, cols);
    let scale = a.amax().max(floor);
    let thr = tol.rank_rel(rows, cols) * scale;
    let mut t = 0;
    for i in 0..rows {
        if t == cols {
            break;
        }
        let (mut pj, mut pmax) = (t, 0.0f64);
        for j in t..cols {
            let v = a[(i, j)].abs();
            if v > pmax {
                (pj, pmax) = (j, v);
            }
        }
        if pmax <= thr || pmax == 0.0 {
            // No pivot in this row among the remaining columns; the residue
            // there is noise relative to the tolerance.
            for j in t..cols {
                a[(i, j)] = 0.0;
            }
            continue;
        }
        a.swap_columns(t, pj);
        w.swap_columns(t, pj);
        for j in t + 1..cols {
            let f = a[(i, j)] / a[(i, t)];
            if f != 0.0 {
                for ii in 0..rows {
                    let delta = f * a[(ii, t)];
                    a[(ii, j)] -= delta;
                }
                for ii in 0..cols {
                    let delta = f * w[(ii, t)];
                    w[(ii, j)] -= delta;
                }
                a[(i, j)] = 0.0;
            }
        }
        t += 1;
    }
    (w, t)
}

/// Row echelon using row operations only. Returns `L` and `s` with
/// `L * M = [E; 0]`, `E` in row echelon form of full row rank `s`.
pub(crate) fn row_echelon_rowops(
    m: &DMatrix<f64>,
    tol: &Tolerance,
    floor: f64,
) -> (DMatrix<f64>, usize) {
    let (w, s) = col_echelon_colops(&m.transpose(), tol, floor);
    (w.transpose(), s)
}

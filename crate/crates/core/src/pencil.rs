//! Staged canonical reduction of the rectangular pencil `A + lambda B`.
//!
//! The pencil is repeatedly compressed through two equivalence stages until
//! the rank-reducing eigenvalues sit in a square block paired with an
//! identity, where an ordinary eigensolver finishes the job. Only the
//! eigenvalues that strictly drop the pencil rank survive; everything else
//! (minimal indices, infinite structure) is deliberately ignored.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::Error;
use crate::matrix::{col_echelon_colops, rank_normal_form, row_echelon_rowops, schur_eigenvalues};
use crate::matrix::{Matrix, Tolerance};

/// One stage-1 decomposition: nonsingular `left`, `right` such that
/// `left * B * right = [[I_r, 0], [0, 0]]` and `left * A * right` carries
/// the block pattern with `E11` (r x r), `E12` (r x t, column echelon, full
/// column rank), `E21` (s x r, row echelon, full row rank) and an identity
/// block of size `q`.
#[derive(Debug, Clone)]
pub struct PencilStage {
    pub e11: Matrix,
    pub e12: Matrix,
    pub e21: Matrix,
    pub r: usize,
    pub s: usize,
    pub t: usize,
    pub q: usize,
    pub left: Matrix,
    pub right: Matrix,
}

/// A rank-reducing eigenvalue with its geometric multiplicity (the exact
/// rank drop of `A + lambda B` at that value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub value: Complex<f64>,
    pub multiplicity: usize,
}

/// The set of rank-reducing eigenvalues of a pencil, together with the
/// structural integers satisfying `rank(A + lambda B) = r + q - m(lambda)`.
#[derive(Debug, Clone)]
pub struct PencilSpectrum {
    pub eigenvalues: Vec<SpectrumEntry>,
    pub r: usize,
    pub q: usize,
    /// Matching tolerance used when looking a value up in the spectrum.
    pub eig_tol: f64,
}

impl PencilSpectrum {
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Geometric multiplicity of a real value, zero when off-spectrum.
    pub fn multiplicity_at(&self, lambda: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|e| {
                e.value.im.abs() <= self.eig_tol * (1.0 + e.value.norm())
                    && (e.value.re - lambda).abs() <= self.eig_tol * (1.0 + lambda.abs())
            })
            .map(|e| e.multiplicity)
            .sum()
    }
}

impl Serialize for PencilSpectrum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            re: f64,
            im: f64,
            mult: usize,
        }
        let entries: Vec<Entry> = self
            .eigenvalues
            .iter()
            .map(|e| Entry { re: e.value.re, im: e.value.im, mult: e.multiplicity })
            .collect();
        let mut st = serializer.serialize_struct("PencilSpectrum", 3)?;
        st.serialize_field("eigenvalues", &entries)?;
        st.serialize_field("r", &self.r)?;
        st.serialize_field("q", &self.q)?;
        st.end()
    }
}

struct RawStage {
    work_a: DMatrix<f64>,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    r: usize,
    s: usize,
    t: usize,
    q: usize,
}

impl RawStage {
    fn e11(&self) -> DMatrix<f64> {
        self.work_a.view((0, 0), (self.r, self.r)).clone_owned()
    }
    fn e12(&self) -> DMatrix<f64> {
        self.work_a.view((0, self.r), (self.r, self.t)).clone_owned()
    }
    fn e21(&self) -> DMatrix<f64> {
        self.work_a.view((self.r, 0), (self.s, self.r)).clone_owned()
    }
}

fn stage1_raw(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: &Tolerance) -> RawStage {
    let (m, n) = (a.nrows(), a.ncols());
    let (s_mat, t_mat, r) = rank_normal_form(b, tol, 0.0);
    let mut left = s_mat;
    let mut right = t_mat;
    let mut wa = &left * a * &right;

    // Compress the block of A untouched by B's identity to [[I_q, 0], [0, 0]].
    // Sub-blocks of the transformed A are ranked against the magnitude of
    // the whole matrix: a block of cancellation residue must not register.
    let scale_a = wa.amax();
    let mut q = 0;
    if m > r && n > r {
        let a22 = wa.view((r, r), (m - r, n - r)).clone_owned();
        let (u, v, qq) = rank_normal_form(&a22, tol, scale_a);
        q = qq;
        let mut lext = DMatrix::identity(m, m);
        lext.view_mut((r, r), (m - r, m - r)).copy_from(&u);
        let mut rext = DMatrix::identity(n, n);
        rext.view_mut((r, r), (n - r, n - r)).copy_from(&v);
        left = &lext * &left;
        right = &right * &rext;
        wa = &lext * &wa * &rext;
    }

    // The I_q rows/columns of A sit where B vanishes, so they clear the
    // coupling into the top-left block without disturbing B.
    if q > 0 && r > 0 {
        let mut l = DMatrix::identity(m, m);
        for i in 0..r {
            for j in 0..q {
                l[(i, r + j)] = -wa[(i, r + j)];
            }
        }
        left = &l * &left;
        wa = &l * &wa;
        let mut rt = DMatrix::identity(n, n);
        for j in 0..q {
            for k in 0..r {
                rt[(r + j, k)] = -wa[(r + j, k)];
            }
        }
        right = &right * &rt;
        wa = &wa * &rt;
    }

    // Column-echelon the remaining top strip using column operations only
    // (row operations would destroy the I_r image of B).
    let free_cols = n - r - q;
    let mut t = 0;
    if r > 0 && free_cols > 0 {
        let f2 = wa.view((0, r + q), (r, free_cols)).clone_owned();
        let (w, tt) = col_echelon_colops(&f2, tol, scale_a.max(wa.amax()));
        t = tt;
        let mut rext = DMatrix::identity(n, n);
        rext.view_mut((r + q, r + q), (free_cols, free_cols)).copy_from(&w);
        right = &right * &rext;
        wa = &wa * &rext;
    }

    // Row-echelon the remaining left strip using row operations only.
    let free_rows = m - r - q;
    let mut s = 0;
    if r > 0 && free_rows > 0 {
        let g2 = wa.view((r + q, 0), (free_rows, r)).clone_owned();
        let (l, ss) = row_echelon_rowops(&g2, tol, scale_a.max(wa.amax()));
        s = ss;
        let mut lext = DMatrix::identity(m, m);
        lext.view_mut((r + q, r + q), (free_rows, free_rows)).copy_from(&l);
        left = &lext * &left;
        wa = &lext * &wa;
    }

    // Reorder blocks to (r, t, q, rest) columns and (r, s, q, rest) rows.
    let col_order: Vec<usize> = (0..r)
        .chain(r + q..r + q + t)
        .chain(r..r + q)
        .chain(r + q + t..n)
        .collect();
    let row_order: Vec<usize> = (0..r)
        .chain(r + q..r + q + s)
        .chain(r..r + q)
        .chain(r + q + s..m)
        .collect();
    let mut pc = DMatrix::zeros(n, n);
    for (newpos, &old) in col_order.iter().enumerate() {
        pc[(old, newpos)] = 1.0;
    }
    let mut pr = DMatrix::zeros(m, m);
    for (newpos, &old) in row_order.iter().enumerate() {
        pr[(newpos, old)] = 1.0;
    }
    left = &pr * &left;
    right = &right * &pc;
    wa = &pr * &wa * &pc;

    RawStage { work_a: wa, left, right, r, s, t, q }
}

fn stage2_raw(st: &RawStage, tol: &Tolerance) -> Result<(DMatrix<f64>, DMatrix<f64>), Error> {
    if st.s + st.t == 0 {
        return Err(Error::StagePrecondition { s: st.s, t: st.t });
    }
    let r = st.r;
    let e11 = st.e11();
    let e12 = st.e12();
    let e21 = st.e21();

    // R maps the full-column-rank coupling E12 onto the last t coordinates.
    let null_left = nullspace_of(&e12.transpose(), tol, r - st.t)?;
    let mut ext = DMatrix::zeros(r, r);
    for (j, v) in null_left.iter().enumerate() {
        ext.view_mut((0, j), (r, 1)).copy_from(v);
    }
    ext.view_mut((0, r - st.t), (r, st.t)).copy_from(&e12);
    let r_mat = ext
        .try_inverse()
        .ok_or_else(|| Error::Numerical("stage-2 left completion is singular".into()))?;

    // Q maps the full-row-rank coupling E21 onto the last s coordinates.
    let null_right = nullspace_of(&e21, tol, r - st.s)?;
    let mut g = DMatrix::zeros(r, r);
    for (i, v) in null_right.iter().enumerate() {
        g.view_mut((i, 0), (1, r)).copy_from(&v.transpose());
    }
    g.view_mut((r - st.s, 0), (st.s, r)).copy_from(&e21);
    let q_mat = g
        .try_inverse()
        .ok_or_else(|| Error::Numerical("stage-2 right completion is singular".into()))?;

    let core = &r_mat * &e11 * &q_mat;
    let bcore = &r_mat * &q_mat;
    let c11 = core.view((0, 0), (r - st.t, r - st.s)).clone_owned();
    let d11 = bcore.view((0, 0), (r - st.t, r - st.s)).clone_owned();
    Ok((c11, d11))
}

fn nullspace_of(
    m: &DMatrix<f64>,
    tol: &Tolerance,
    expected: usize,
) -> Result<Vec<DVector<f64>>, Error> {
    let basis = Matrix::wrap(m.clone()).nullspace_basis(tol);
    if basis.len() != expected {
        return Err(Error::Numerical(format!(
            "stage-1 coupling block is rank-deficient: null space dimension {} (expected {})",
            basis.len(),
            expected
        )));
    }
    Ok(basis)
}

/// First stage of the canonical reduction: the block form exposing E11,
/// E12, E21 and the identity block against a rank-normalized B.
pub fn tw_stage1(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<PencilStage, Error> {
    check_same_shape(a, b)?;
    let st = stage1_raw(a.inner(), b.inner(), tol);
    Ok(PencilStage {
        e11: Matrix::wrap(st.e11()),
        e12: Matrix::wrap(st.e12()),
        e21: Matrix::wrap(st.e21()),
        r: st.r,
        s: st.s,
        t: st.t,
        q: st.q,
        left: Matrix::wrap(st.left),
        right: Matrix::wrap(st.right),
    })
}

/// Second stage: compresses a stage with `s + t > 0` to the strictly
/// smaller pencil `(C11, D11)` of shape `(r - t) x (r - s)` that carries
/// all remaining rank-reducing eigenvalues.
pub fn tw_stage2(stage: &PencilStage, tol: &Tolerance) -> Result<(Matrix, Matrix), Error> {
    if stage.s + stage.t == 0 {
        return Err(Error::StagePrecondition { s: stage.s, t: stage.t });
    }
    let raw = RawStage {
        work_a: assemble_work_a(stage),
        left: stage.left.inner().clone(),
        right: stage.right.inner().clone(),
        r: stage.r,
        s: stage.s,
        t: stage.t,
        q: stage.q,
    };
    let (c11, d11) = stage2_raw(&raw, tol)?;
    Ok((Matrix::wrap(c11), Matrix::wrap(d11)))
}

fn assemble_work_a(stage: &PencilStage) -> DMatrix<f64> {
    let (r, s, t) = (stage.r, stage.s, stage.t);
    let mut wa = DMatrix::zeros(r + s, r + t);
    wa.view_mut((0, 0), (r, r)).copy_from(stage.e11.inner());
    wa.view_mut((0, r), (r, t)).copy_from(stage.e12.inner());
    wa.view_mut((r, 0), (s, r)).copy_from(stage.e21.inner());
    wa
}

/// Runs the full staged iteration and returns the certified spectrum.
///
/// The working pencil shrinks strictly at every stage-2 pass, so the loop
/// terminates in at most `m + n` rounds. Each candidate eigenvalue is kept
/// only if the direct rank of `A + lambda B` confirms the drop below the
/// generic rank.
pub fn twcf_spectrum(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<PencilSpectrum, Error> {
    check_same_shape(a, b)?;
    let mut cur_a = a.inner().clone();
    let mut cur_b = b.inner().clone();
    let mut offset = 0usize;
    let mut first_r = None;
    let budget = a.rows() + a.cols() + 2;

    let (candidates, generic_sub) = {
        let mut rounds = 0;
        loop {
            rounds += 1;
            if rounds > budget {
                return Err(Error::Numerical("pencil iteration failed to shrink".into()));
            }
            if cur_a.nrows() == 0 || cur_a.ncols() == 0 {
                break (Vec::new(), 0);
            }
            let st = stage1_raw(&cur_a, &cur_b, tol);
            if first_r.is_none() {
                first_r = Some(st.r);
            }
            if st.r == st.s || st.r == st.t {
                // No eigenvalues exist; the residual pencil after the
                // (possibly degenerate) stage-2 compression is empty.
                break (Vec::new(), st.s + st.t + st.q);
            }
            if st.s + st.t == 0 {
                let ev = terminal_eigenvalues(&st.e11(), tol)?;
                break (ev, st.r + st.q);
            }
            let (c11, d11) = stage2_raw(&st, tol)?;
            offset += st.s + st.t + st.q;
            cur_a = c11;
            cur_b = d11;
        }
    };

    let generic = offset + generic_sub;
    let mut kept = Vec::new();
    for (value, mult) in candidates {
        if mult == 0 {
            continue;
        }
        let direct = pencil_rank_complex(a.inner(), b.inner(), value, tol);
        if direct < generic {
            kept.push(SpectrumEntry { value, multiplicity: mult });
        }
    }
    kept.sort_by(|x, y| (x.value.re, x.value.im).partial_cmp(&(y.value.re, y.value.im)).unwrap());

    let r = first_r.unwrap_or(0);
    Ok(PencilSpectrum { eigenvalues: kept, r, q: generic.saturating_sub(r), eig_tol: tol.eig_tol })
}

/// Eigenvalues of the terminal square pencil `E11 + lambda I`, clustered
/// within tolerance; multiplicity is the null-space dimension at the
/// cluster mean (the count of Jordan blocks for that value).
fn terminal_eigenvalues(
    e11: &DMatrix<f64>,
    tol: &Tolerance,
) -> Result<Vec<(Complex<f64>, usize)>, Error> {
    let n = e11.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut values: Vec<Complex<f64>> =
        schur_eigenvalues(e11)?.iter().map(|mu| -mu).collect();
    // Snap near-real values so conjugate pairs straddling the axis merge.
    for v in values.iter_mut() {
        if v.im.abs() <= tol.eig_tol * (1.0 + v.norm()) {
            v.im = 0.0;
        }
    }
    let mut out = Vec::new();
    let mut used = vec![false; values.len()];
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        let mut cluster = vec![values[i]];
        used[i] = true;
        for j in i + 1..values.len() {
            if !used[j]
                && (values[j] - values[i]).norm() <= tol.eig_tol * (1.0 + values[i].norm())
            {
                cluster.push(values[j]);
                used[j] = true;
            }
        }
        let mean = cluster.iter().sum::<Complex<f64>>() / cluster.len() as f64;
        let ident = DMatrix::identity(n, n);
        let gm = n - pencil_rank_complex(e11, &ident, mean, tol);
        out.push((mean, gm));
    }
    Ok(out)
}

/// Numerical rank of `A + lambda B` for complex `lambda`, via the real
/// 2x2-block embedding when the value has an imaginary part. The rank is
/// judged against the pencil's own magnitude `||A|| + |lambda| ||B||`, so a
/// fully cancelled combination reads as rank zero instead of picking up its
/// rounding residue as signal.
pub(crate) fn pencil_rank_complex(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: Complex<f64>,
    tol: &Tolerance,
) -> usize {
    let scale = a.norm() + lambda.norm() * b.norm();
    if lambda.im == 0.0 {
        return Matrix::wrap(a + b * lambda.re).rank_scaled(scale, tol);
    }
    let (m, n) = (a.nrows(), a.ncols());
    let real = a + b * lambda.re;
    let imag = b * lambda.im;
    let mut emb = DMatrix::zeros(2 * m, 2 * n);
    emb.view_mut((0, 0), (m, n)).copy_from(&real);
    emb.view_mut((m, n), (m, n)).copy_from(&real);
    emb.view_mut((0, n), (m, n)).copy_from(&(-&imag));
    emb.view_mut((m, 0), (m, n)).copy_from(&imag);
    Matrix::wrap(emb).rank_scaled(scale, tol) / 2
}

/// The spectral rank formula: `rank(A + lambda B) = r + q - m(lambda)`.
pub fn rank_at(lambda: f64, spectrum: &PencilSpectrum) -> usize {
    (spectrum.r + spectrum.q).saturating_sub(spectrum.multiplicity_at(lambda))
}

/// Real, strictly positive spectrum values with multiplicities, ascending.
pub fn positive_real_spectrum(spectrum: &PencilSpectrum, tol: &Tolerance) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = spectrum
        .eigenvalues
        .iter()
        .filter(|e| e.value.im.abs() <= tol.eig_tol * (1.0 + e.value.norm()) && e.value.re > tol.eig_tol)
        .map(|e| (e.value.re, e.multiplicity))
        .collect();
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    out
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<(), Error> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "pencil matrices must share a shape: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::numeric_rank;
    use approx::assert_abs_diff_eq;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn check_stage1_pattern(a: &Matrix, b: &Matrix, st: &PencilStage) {
        let (m, n) = (a.rows(), a.cols());
        let wb = st.left.inner() * b.inner() * st.right.inner();
        for i in 0..m {
            for j in 0..n {
                let expect = if i == j && i < st.r { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(wb[(i, j)], expect, epsilon = 1e-9);
            }
        }
        let wa = st.left.inner() * a.inner() * st.right.inner();
        let (r, s, t, q) = (st.r, st.s, st.t, st.q);
        for i in 0..m {
            for j in 0..n {
                let in_e11 = i < r && j < r;
                let in_e12 = i < r && (r..r + t).contains(&j);
                let in_e21 = (r..r + s).contains(&i) && j < r;
                let in_iq = (r + s..r + s + q).contains(&i) && (r + t..r + t + q).contains(&j);
                if in_iq {
                    let expect = if i - r - s == j - r - t { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(wa[(i, j)], expect, epsilon = 1e-9);
                } else if !(in_e11 || in_e12 || in_e21) {
                    assert_abs_diff_eq!(wa[(i, j)], 0.0, epsilon = 1e-9);
                }
            }
        }
        // Transforms are nonsingular.
        let tol = Tolerance::default();
        assert_eq!(st.left.rank(&tol), m);
        assert_eq!(st.right.rank(&tol), n);
    }

    #[test]
    fn stage1_b_zero() {
        let tol = Tolerance::default();
        let a = Matrix::identity(2);
        let b = Matrix::zeros(2, 2);
        let st = tw_stage1(&a, &b, &tol).unwrap();
        assert_eq!(st.r, 0);
        assert_eq!(st.q, 2);
        assert_eq!((st.s, st.t), (0, 0));
        check_stage1_pattern(&a, &b, &st);
    }

    #[test]
    fn stage1_b_identity() {
        let tol = Tolerance::default();
        let a = mat(&[&[-2.0, 0.0], &[0.0, -2.0]]);
        let b = Matrix::identity(2);
        let st = tw_stage1(&a, &b, &tol).unwrap();
        assert_eq!((st.r, st.s, st.t, st.q), (2, 0, 0, 0));
        check_stage1_pattern(&a, &b, &st);

        let a = Matrix::zeros(2, 2);
        let st = tw_stage1(&a, &b, &tol).unwrap();
        assert_eq!((st.r, st.s, st.t, st.q), (2, 0, 0, 0));
        assert_eq!(st.e11, Matrix::zeros(2, 2));
    }

    #[test]
    fn stage1_coupled_pencil() {
        // B of rank 1 with A coupling through both off-diagonal strips.
        let tol = Tolerance::default();
        let a = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let b = mat(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let st = tw_stage1(&a, &b, &tol).unwrap();
        assert_eq!((st.r, st.s, st.t, st.q), (1, 1, 1, 0));
        check_stage1_pattern(&a, &b, &st);
    }

    #[test]
    fn stage1_rectangular_random_pattern() {
        let tol = Tolerance::default();
        let a = mat(&[
            &[0.3, -1.2, 0.7, 2.0],
            &[1.1, 0.4, -0.6, 0.2],
            &[-0.5, 0.9, 1.3, -0.8],
        ]);
        // Row 3 of B equals row 1 + row 2, so rank(B) = 2.
        let b = mat(&[
            &[1.0, 0.0, 2.0, -1.0],
            &[0.5, 1.0, 0.0, 0.3],
            &[1.5, 1.0, 2.0, -0.7],
        ]);
        let st = tw_stage1(&a, &b, &tol).unwrap();
        assert_eq!(st.r, 2);
        check_stage1_pattern(&a, &b, &st);
    }

    #[test]
    fn stage2_requires_coupling() {
        let tol = Tolerance::default();
        let st = tw_stage1(&Matrix::identity(2), &Matrix::identity(2), &tol).unwrap();
        assert!(matches!(
            tw_stage2(&st, &tol),
            Err(Error::StagePrecondition { .. })
        ));
    }

    #[test]
    fn stage2_shrinks_the_pencil() {
        let tol = Tolerance::default();
        let a = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let b = mat(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let st = tw_stage1(&a, &b, &tol).unwrap();
        let (c11, d11) = tw_stage2(&st, &tol).unwrap();
        assert_eq!((c11.rows(), c11.cols()), (st.r - st.t, st.r - st.s));
        assert_eq!((d11.rows(), d11.cols()), (c11.rows(), c11.cols()));
    }

    #[test]
    fn stage2_nontrivial_core_keeps_eigenvalue() {
        // 3x3 pencil mixing a genuine eigenvalue block with one coupling pair:
        // lambda = 4 drops the rank (row 1), rows 2/3 couple via s = t = 1.
        let tol = Tolerance::default();
        let a = mat(&[&[-4.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        let b = mat(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        let st = tw_stage1(&a, &b, &tol).unwrap();
        assert_eq!(st.r, 2);
        assert_eq!(st.s + st.t, 2);
        check_stage1_pattern(&a, &b, &st);
        let (c11, d11) = tw_stage2(&st, &tol).unwrap();
        assert_eq!((c11.rows(), c11.cols()), (1, 1));
        // The surviving 1x1 pencil must vanish at lambda = 4.
        assert_abs_diff_eq!(c11[(0, 0)] + 4.0 * d11[(0, 0)], 0.0, epsilon = 1e-9);

        let sp = twcf_spectrum(&a, &b, &tol).unwrap();
        assert_eq!(sp.eigenvalues.len(), 1);
        assert_abs_diff_eq!(sp.eigenvalues[0].value.re, 4.0, epsilon = 1e-8);
        assert_eq!(sp.eigenvalues[0].multiplicity, 1);
        assert_eq!(rank_at(4.0, &sp), 2);
        assert_eq!(numeric_rank(&(a.inner() + 4.0 * b.inner()), &tol), 2);
        assert_eq!(rank_at(1.0, &sp), 3);
    }

    #[test]
    fn spectrum_scaled_identity() {
        let tol = Tolerance::default();
        let a = mat(&[&[-2.0, 0.0], &[0.0, -2.0]]);
        let b = Matrix::identity(2);
        let sp = twcf_spectrum(&a, &b, &tol).unwrap();
        assert_eq!(sp.eigenvalues.len(), 1);
        assert_abs_diff_eq!(sp.eigenvalues[0].value.re, 2.0, epsilon = 1e-10);
        assert_eq!(sp.eigenvalues[0].multiplicity, 2);
        assert_eq!((sp.r, sp.q), (2, 0));
        assert_eq!(rank_at(2.0, &sp), 0);
        assert_eq!(rank_at(1.0, &sp), 2);
    }

    #[test]
    fn spectrum_empty_when_b_vanishes() {
        let tol = Tolerance::default();
        let sp = twcf_spectrum(&Matrix::identity(2), &Matrix::zeros(2, 2), &tol).unwrap();
        assert!(sp.is_empty());
        assert_eq!(rank_at(3.7, &sp), 2);
        assert_eq!(rank_at(0.0, &sp), 2);
    }

    #[test]
    fn spectrum_nilpotent_single_jordan_block() {
        let tol = Tolerance::default();
        let a = mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = Matrix::identity(2);
        let sp = twcf_spectrum(&a, &b, &tol).unwrap();
        assert_eq!(sp.eigenvalues.len(), 1);
        assert_abs_diff_eq!(sp.eigenvalues[0].value.norm(), 0.0, epsilon = 1e-9);
        assert_eq!(sp.eigenvalues[0].multiplicity, 1);
        assert!(positive_real_spectrum(&sp, &tol).is_empty());
    }

    #[test]
    fn positive_real_filtering() {
        let tol = Tolerance::default();
        let sp = PencilSpectrum {
            eigenvalues: vec![
                SpectrumEntry { value: Complex::new(2.0, 0.0), multiplicity: 2 },
                SpectrumEntry { value: Complex::new(-3.0, 0.0), multiplicity: 1 },
                SpectrumEntry { value: Complex::new(0.0, 1.0), multiplicity: 1 },
                SpectrumEntry { value: Complex::new(0.0, -1.0), multiplicity: 1 },
                SpectrumEntry { value: Complex::new(0.0, 0.0), multiplicity: 1 },
            ],
            r: 5,
            q: 0,
            eig_tol: tol.eig_tol,
        };
        assert_eq!(positive_real_spectrum(&sp, &tol), vec![(2.0, 2)]);
    }

    #[test]
    fn spectrum_serializes_per_contract() {
        let sp = PencilSpectrum {
            eigenvalues: vec![SpectrumEntry { value: Complex::new(2.0, 0.0), multiplicity: 2 }],
            r: 2,
            q: 0,
            eig_tol: 1e-9,
        };
        let json = serde_json::to_value(&sp).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"eigenvalues":[{"re":2.0,"im":0.0,"mult":2}],"r":2,"q":0})
        );
    }
}

//! Game-level reduction pipeline.
//!
//! A bimatrix game `(A, B)` is strategically equivalent to any positive
//! affine transform of itself. The pipeline first rescales player 2's
//! payoffs by `gamma*`, the positive pencil eigenvalue that maximizes the
//! rank drop of `A + gamma B`, then removes up to two more rank units via
//! ones-vector Wedderburn shifts (`A - 1 u^T`, `gamma B - v 1^T`). The
//! result is a replayable certificate.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::matrix::{Matrix, Tolerance};
use crate::pencil::{positive_real_spectrum, twcf_spectrum, PencilSpectrum};

/// A finite two-player game in strategic form; payoff matrices share the
/// shape `m x n` (player 1 picks rows, player 2 picks columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    pub a: Matrix,
    pub b: Matrix,
}

impl BimatrixGame {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self, Error> {
        if a.rows() != b.rows() || a.cols() != b.cols() {
            return Err(Error::Shape(format!(
                "payoff matrices must share a shape: {}x{} vs {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        Ok(BimatrixGame { a, b })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// The payoff-sum matrix `C = A + B` whose rank is the game rank.
    pub fn c(&self) -> Matrix {
        Matrix::wrap(self.a.inner() + self.b.inner())
    }

    /// The game rank, `rank(A + B)`, judged relative to the payoff scale so
    /// that a payoff sum at rounding level of `A`, `B` counts as zero-sum.
    pub fn game_rank(&self, tol: &Tolerance) -> usize {
        let scale = self.a.inner().norm() + self.b.inner().norm();
        self.c().rank_scaled(scale, tol)
    }

    /// Player-swapped view: `(B^T, A^T)`, an `n x m` game with the same
    /// equilibria up to exchanging the players' roles.
    pub fn swapped(&self) -> BimatrixGame {
        BimatrixGame { a: self.b.transpose(), b: self.a.transpose() }
    }
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    m: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
}

impl Serialize for BimatrixGame {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GameJson { m: self.m(), n: self.n(), a: self.a.clone(), b: self.b.clone() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BimatrixGame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GameJson::deserialize(deserializer)?;
        let g = BimatrixGame::new(raw.a, raw.b).map_err(D::Error::custom)?;
        if g.m() != raw.m || g.n() != raw.n {
            return Err(D::Error::custom(format!(
                "declared size {}x{} does not match matrices ({}x{})",
                raw.m,
                raw.n,
                g.m(),
                g.n()
            )));
        }
        Ok(g)
    }
}

/// Parameters of a positive affine transformation:
/// `A -> alpha1 A + beta1 1_m u^T`, `B -> alpha2 B + beta2 v 1_n^T`.
#[derive(Debug, Clone)]
pub struct PatParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl Serialize for PatParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PatParams", 6)?;
        st.serialize_field("alpha1", &self.alpha1)?;
        st.serialize_field("alpha2", &self.alpha2)?;
        st.serialize_field("beta1", &self.beta1)?;
        st.serialize_field("beta2", &self.beta2)?;
        st.serialize_field("u", &self.u.as_slice().to_vec())?;
        st.serialize_field("v", &self.v.as_slice().to_vec())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PatParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            alpha1: f64,
            alpha2: f64,
            beta1: f64,
            beta2: f64,
            u: Vec<f64>,
            v: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Ok(PatParams {
            alpha1: raw.alpha1,
            alpha2: raw.alpha2,
            beta1: raw.beta1,
            beta2: raw.beta2,
            u: DVector::from_vec(raw.u),
            v: DVector::from_vec(raw.v),
        })
    }
}

impl PatParams {
    pub fn identity(m: usize, n: usize) -> Self {
        PatParams {
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: 0.0,
            beta2: 0.0,
            u: DVector::zeros(n),
            v: DVector::zeros(m),
        }
    }
}

/// Applies a positive affine transformation; the equilibrium set of the
/// result is identical to the input's.
pub fn apply_pat(g: &BimatrixGame, p: &PatParams) -> Result<BimatrixGame, Error> {
    if p.alpha1 <= 0.0 || !p.alpha1.is_finite() {
        return Err(Error::NonPositiveScale("alpha1"));
    }
    if p.alpha2 <= 0.0 || !p.alpha2.is_finite() {
        return Err(Error::NonPositiveScale("alpha2"));
    }
    if p.u.len() != g.n() || p.v.len() != g.m() {
        return Err(Error::Shape(format!(
            "shift vectors must have lengths n = {} and m = {}, got {} and {}",
            g.n(),
            g.m(),
            p.u.len(),
            p.v.len()
        )));
    }
    let ones_m = ones(g.m());
    let ones_n = ones(g.n());
    let a = g.a.inner() * p.alpha1 + &ones_m * p.u.transpose() * p.beta1;
    let b = g.b.inner() * p.alpha2 + &p.v * ones_n.transpose() * p.beta2;
    BimatrixGame::new(Matrix::new(a)?, Matrix::new(b)?)
}

/// Which branch of the pipeline produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionPath {
    PencilOnly,
    OneStepRow,
    OneStepColumn,
    TwoStep,
    None,
}

/// Output of the reduction pipeline. The reduced game is stored in the
/// working orientation: when `transposed` is set the input was an `m > n`
/// game and the pipeline operated on the player-swapped transpose, so
/// `reduced` relates to `input.swapped()`.
///
/// Replay contract: with `(A~, B~)` the working-orientation input,
/// `A_hat = A~ - 1_m u_hat^T` and `B_hat = gamma* B~ - v_hat 1_n^T`
/// (missing shifts read as zero).
#[derive(Debug, Clone)]
pub struct ReductionCertificate {
    pub gamma_star: f64,
    pub u_hat: Option<DVector<f64>>,
    pub v_hat: Option<DVector<f64>>,
    pub reduced: BimatrixGame,
    pub rank_before: usize,
    pub rank_after: usize,
    pub path: ReductionPath,
    pub transposed: bool,
    /// Pencil spectrum computed during `reduce`; absent for certificates
    /// built by the standalone one-/two-step entry points. Not part of the
    /// JSON interchange format.
    pub spectrum: Option<PencilSpectrum>,
}

impl Serialize for ReductionCertificate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ReductionCertificate", 9)?;
        st.serialize_field("gamma_star", &self.gamma_star)?;
        st.serialize_field("u_hat", &self.u_hat.as_ref().map(|v| v.as_slice().to_vec()))?;
        st.serialize_field("v_hat", &self.v_hat.as_ref().map(|v| v.as_slice().to_vec()))?;
        st.serialize_field("A_hat", &self.reduced.a)?;
        st.serialize_field("B_hat", &self.reduced.b)?;
        st.serialize_field("rank_before", &self.rank_before)?;
        st.serialize_field("rank_after", &self.rank_after)?;
        st.serialize_field("path", &self.path)?;
        st.serialize_field("transposed", &self.transposed)?;
        st.end()
    }
}

impl ReductionCertificate {
    /// Recomputes the reduced game from the recorded shifts and both ranks,
    /// and checks them against the stored values.
    pub fn replay(&self, input: &BimatrixGame, tol: &Tolerance) -> bool {
        let work = if self.transposed { input.swapped() } else { input.clone() };
        if work.m() != self.reduced.m() || work.n() != self.reduced.n() {
            return false;
        }
        let (m, n) = (work.m(), work.n());
        let mut a_hat = work.a.inner().clone();
        if let Some(u) = &self.u_hat {
            a_hat -= ones(m) * u.transpose();
        }
        let mut b_hat = work.b.inner() * self.gamma_star;
        if let Some(v) = &self.v_hat {
            b_hat -= v * ones(n).transpose();
        }
        let scale = 1.0 + work.a.inner().norm() + work.b.inner().norm();
        let close = (&a_hat - self.reduced.a.inner()).norm() <= tol.residual_tol * scale
            && (&b_hat - self.reduced.b.inner()).norm() <= tol.residual_tol * scale;
        let rank_in = work.game_rank(tol);
        // Judge the reduced rank against the input scale: the shifts cancel
        // input-magnitude payoffs, so the residue must not set the scale.
        let rank_out = Matrix::wrap(a_hat + b_hat).rank_scaled(scale, tol);
        close && rank_in == self.rank_before && rank_out == self.rank_after
    }

    /// The reduced game expressed in the input's orientation (undoes the
    /// internal player swap when one was recorded).
    pub fn reduced_in_input_orientation(&self) -> BimatrixGame {
        if self.transposed {
            self.reduced.swapped()
        } else {
            self.reduced.clone()
        }
    }
}

fn ones(len: usize) -> DVector<f64> {
    DVector::from_element(len, 1.0)
}

/// Coordinate vector selecting the row of the largest-magnitude entry.
fn coordinate_row_probe(c: &Matrix) -> DVector<f64> {
    let (mut bi, mut best) = (0usize, -1.0f64);
    for i in 0..c.rows() {
        for j in 0..c.cols() {
            let v = c[(i, j)].abs();
            if v > best {
                (bi, best) = (i, v);
            }
        }
    }
    let mut y = DVector::zeros(c.rows());
    y[bi] = 1.0;
    y
}

fn coordinate_col_probe(c: &Matrix) -> DVector<f64> {
    coordinate_row_probe(&c.transpose())
}

/// Selects the scale `gamma*` for player 2's payoffs: the strictly
/// positive pencil eigenvalue with maximal rank drop, provided it beats
/// the drop already available at `gamma = 1`; otherwise 1. Candidates are
/// Newton-refined on the smallest singular value of `A + gamma B` and then
/// certified by a direct rank comparison.
pub fn find_gamma_star(g: &BimatrixGame, tol: &Tolerance) -> (f64, PencilSpectrum) {
    let spectrum = match twcf_spectrum(&g.a, &g.b, tol) {
        Ok(sp) => sp,
        Err(_) => {
            return (
                1.0,
                PencilSpectrum { eigenvalues: Vec::new(), r: 0, q: 0, eig_tol: tol.eig_tol },
            )
        }
    };
    let m_at_one = spectrum.multiplicity_at(1.0);
    let mut best: Option<(f64, usize)> = None;
    for (value, mult) in positive_real_spectrum(&spectrum, tol) {
        let better = match best {
            Option::None => true,
            Some((bv, bm)) => {
                mult > bm
                    || (mult == bm
                        && ((value - 1.0).abs() < (bv - 1.0).abs() - tol.eig_tol
                            || ((value - 1.0).abs() <= (bv - 1.0).abs() + tol.eig_tol
                                && value < bv)))
            }
        };
        if better {
            best = Some((value, mult));
        }
    }
    if let Some((candidate, mult)) = best {
        if mult > m_at_one {
            let gamma = refine_gamma(g.a.inner(), g.b.inner(), candidate);
            let rank_at_one = g.game_rank(tol);
            let shifted_scale = g.a.inner().norm() + gamma * g.b.inner().norm();
            let shifted = Matrix::wrap(g.a.inner() + g.b.inner() * gamma);
            if gamma > 0.0 && shifted.rank_scaled(shifted_scale, tol) < rank_at_one {
                return (gamma, spectrum);
            }
        }
    }
    (1.0, spectrum)
}

/// Newton iteration on the smallest singular value of `A + gamma B`
/// (derivative `u^T B v` at the corresponding singular pair); keeps the
/// iterate with the smallest residual.
fn refine_gamma(a: &DMatrix<f64>, b: &DMatrix<f64>, gamma0: f64) -> f64 {
    let mut gamma = gamma0;
    let mut best = (gamma0, f64::INFINITY);
    for _ in 0..25 {
        let m = a + b * gamma;
        let svd = crate::matrix::svd_robust(&m);
        let (mut idx, mut smin) = (0usize, f64::INFINITY);
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s < smin {
                (idx, smin) = (i, s);
            }
        }
        if smin < best.1 {
            best = (gamma, smin);
        }
        let scale = svd.singular_values.max().max(1.0);
        if smin <= 1e-14 * scale {
            break;
        }
        let u = svd.u.column(idx).clone_owned();
        let v = svd.v_t.row(idx).transpose();
        let deriv = (u.transpose() * b * v)[(0, 0)];
        if deriv.abs() <= 1e-14 * b.norm().max(1.0) {
            break;
        }
        let next = gamma - smin / deriv;
        if !next.is_finite() || next <= 0.0 || (next - gamma0).abs() > 0.5 * (1.0 + gamma0.abs()) {
            break;
        }
        gamma = next;
    }
    best.0
}

fn make_cert(
    g: &BimatrixGame,
    u_hat: Option<DVector<f64>>,
    v_hat: Option<DVector<f64>>,
    path: ReductionPath,
    rank_before: usize,
    tol: &Tolerance,
) -> Option<ReductionCertificate> {
    let (m, n) = (g.m(), g.n());
    let mut a_hat = g.a.inner().clone();
    if let Some(u) = &u_hat {
        a_hat -= ones(m) * u.transpose();
    }
    let mut b_hat = g.b.inner().clone();
    if let Some(v) = &v_hat {
        b_hat -= v * ones(n).transpose();
    }
    let reduced = BimatrixGame::new(Matrix::new(a_hat).ok()?, Matrix::new(b_hat).ok()?).ok()?;
    // The shifted payoffs are differences of input-scale quantities, so
    // their rank is judged against the input's magnitude: a fully cancelled
    // payoff sum must read as rank zero even when the residue dominates the
    // reduced matrices themselves.
    let in_scale = g.a.inner().norm() + g.b.inner().norm();
    let rank_after = reduced.c().rank_scaled(in_scale, tol);
    Some(ReductionCertificate {
        gamma_star: 1.0,
        u_hat,
        v_hat,
        reduced,
        rank_before,
        rank_after,
        path,
        transposed: false,
        spectrum: Option::None,
    })
}

/// One-step row reduction: when `1_m` lies in the column span of
/// `C = A + B`, shifting `A` by `-1_m u_hat^T` lowers the game rank by one.
pub fn reduce_one_step_row(g: &BimatrixGame, tol: &Tolerance) -> Option<ReductionCertificate> {
    let c = g.c();
    let k = g.game_rank(tol);
    if k < 1 {
        return Option::None;
    }
    let x1 = c.solve(&ones(g.m()), tol)?;
    let y1 = coordinate_row_probe(&c);
    let w1 = y1.dot(&(c.inner() * &x1));
    if w1.abs() <= tol.residual_tol {
        return Option::None;
    }
    let u_hat = c.inner().transpose() * &y1 / w1;
    let cert = make_cert(g, Some(u_hat), Option::None, ReductionPath::OneStepRow, k, tol)?;
    (cert.rank_after == k - 1).then_some(cert)
}

/// One-step column reduction (transpose dual): when `1_n` lies in the
/// column span of `C^T`, shifting `B` by `-v_hat 1_n^T` lowers the rank.
pub fn reduce_one_step_column(g: &BimatrixGame, tol: &Tolerance) -> Option<ReductionCertificate> {
    let c = g.c();
    let k = g.game_rank(tol);
    if k < 1 {
        return Option::None;
    }
    let y1 = c.transpose().solve(&ones(g.n()), tol)?;
    let x1 = coordinate_col_probe(&c);
    let w1 = y1.dot(&(c.inner() * &x1));
    if w1.abs() <= tol.residual_tol {
        return Option::None;
    }
    let v_hat = c.inner() * &x1 / w1;
    let cert = make_cert(g, Option::None, Some(v_hat), ReductionPath::OneStepColumn, k, tol)?;
    (cert.rank_after == k - 1).then_some(cert)
}

/// Two-step reduction: requires an `x1` with `C x1 = 1_m`, `1_n^T x1 = 0`
/// (checked via the bordered rank test) and `1_n` in the column span of
/// `C^T`; removes two rank units via one shift per player.
pub fn reduce_two_step(g: &BimatrixGame, tol: &Tolerance) -> Option<ReductionCertificate> {
    let c = g.c();
    let (m, n) = (g.m(), g.n());
    let k = g.game_rank(tol);
    if k < 2 {
        return Option::None;
    }
    // Bordered test: [C 1_m; 1_n^T 0] keeps rank k iff a zero-sum-weighted
    // solution of C x = 1_m exists.
    let mut bordered = DMatrix::zeros(m + 1, n + 1);
    bordered.view_mut((0, 0), (m, n)).copy_from(c.inner());
    bordered.view_mut((0, n), (m, 1)).copy_from(&ones(m));
    bordered.view_mut((m, 0), (1, n)).copy_from(&ones(n).transpose());
    if Matrix::wrap(bordered).rank(tol) != k {
        return Option::None;
    }
    if !c.transpose().in_column_span(&ones(n), tol) {
        return Option::None;
    }
    let mut stacked = DMatrix::zeros(m + 1, n);
    stacked.view_mut((0, 0), (m, n)).copy_from(c.inner());
    stacked.view_mut((m, 0), (1, n)).copy_from(&ones(n).transpose());
    let mut rhs = DVector::zeros(m + 1);
    rhs.view_mut((0, 0), (m, 1)).copy_from(&ones(m));
    let x1 = Matrix::wrap(stacked).solve(&rhs, tol)?;

    let y1 = coordinate_row_probe(&c);
    let w1 = y1.dot(&(c.inner() * &x1));
    if w1.abs() <= tol.residual_tol {
        return Option::None;
    }
    let u_hat = c.inner().transpose() * &y1 / w1;
    let c2 = Matrix::wrap(c.inner() - ones(m) * u_hat.transpose());

    // 1_n stays in colspan(C2^T) because 1_n^T x1 = 0 (span preservation).
    let y2 = c2.transpose().solve(&ones(n), tol)?;
    let x2 = coordinate_col_probe(&c2);
    let w2 = y2.dot(&(c2.inner() * &x2));
    if w2.abs() <= tol.residual_tol {
        return Option::None;
    }
    let v_hat = c2.inner() * &x2 / w2;

    let cert = make_cert(g, Some(u_hat), Some(v_hat), ReductionPath::TwoStep, k, tol)?;
    (cert.rank_after == k - 2).then_some(cert)
}

/// Full pipeline: gamma* rescaling followed by the strongest applicable
/// Wedderburn shift (two-step, then one-step row, then one-step column).
/// Total except for rank-0 inputs, which are already zero-sum equivalent.
pub fn reduce(g: &BimatrixGame, tol: &Tolerance) -> Result<ReductionCertificate, Error> {
    let rank_before = g.game_rank(tol);
    if rank_before == 0 {
        return Err(Error::RankZero);
    }
    let transposed = g.m() > g.n();
    let work = if transposed { g.swapped() } else { g.clone() };

    let (gamma_star, spectrum) = find_gamma_star(&work, tol);
    let scaled = BimatrixGame::new(
        work.a.clone(),
        Matrix::wrap(work.b.inner() * gamma_star),
    )?;
    let k_bar = scaled.game_rank(tol);

    let shifted = reduce_two_step(&scaled, tol)
        .or_else(|| reduce_one_step_row(&scaled, tol))
        .or_else(|| reduce_one_step_column(&scaled, tol));

    let mut cert = match shifted {
        Some(c) => c,
        Option::None => {
            let path = if k_bar < rank_before {
                ReductionPath::PencilOnly
            } else {
                ReductionPath::None
            };
            ReductionCertificate {
                gamma_star,
                u_hat: Option::None,
                v_hat: Option::None,
                reduced: scaled,
                rank_before,
                rank_after: k_bar,
                path,
                transposed: false,
                spectrum: Option::None,
            }
        }
    };
    cert.gamma_star = gamma_star;
    cert.rank_before = rank_before;
    cert.transposed = transposed;
    cert.spectrum = Some(spectrum);
    Ok(cert)
}

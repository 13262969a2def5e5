//! Support-enumeration ground truth for small bimatrix games.
//!
//! The oracle computes every Nash equilibrium of a nondegenerate game by
//! solving the indifference system of each equal-size support pair, then
//! compares equilibrium sets as sets. It exists purely for verification, so
//! the size cap is deliberate: exponential enumeration is fine at desk scale
//! and nowhere else.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::Error;
use crate::matrix::{Matrix, Tolerance};
use crate::reduction::BimatrixGame;

/// Default per-dimension size cap for the exponential enumeration.
pub const ORACLE_SIZE_CAP: usize = 5;

/// Tolerance for matching two profiles (probability space, fixed
/// independently of the matrix tolerances).
pub const PROFILE_TOL: f64 = 1e-7;

/// Best-response slack for the pure-deviation checks.
pub const BEST_RESPONSE_TOL: f64 = 1e-7;

/// Probabilities this far below zero are rejected; milder negatives are
/// rounding and get clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// A mixed-strategy pair with both players' expected payoffs.
#[derive(Debug, Clone)]
pub struct MixedProfile {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
    pub payoff1: f64,
    pub payoff2: f64,
}

impl Serialize for MixedProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("MixedProfile", 3)?;
        st.serialize_field("p", &self.p.as_slice().to_vec())?;
        st.serialize_field("q", &self.q.as_slice().to_vec())?;
        st.serialize_field("payoffs", &[self.payoff1, self.payoff2])?;
        st.end()
    }
}

/// All equilibria found by support enumeration, with a degeneracy flag.
///
/// `degenerate` is raised when any support system is rank-deficient, a
/// solution sits on the boundary of its support, or a support admits more
/// pure best responses than its size; comparisons on degenerate games are
/// refused because the enumeration is then unreliable.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSet {
    pub profiles: Vec<MixedProfile>,
    pub degenerate: bool,
}

/// Enumerates all Nash equilibria over equal-size support pairs.
pub fn enumerate_equilibria(g: &BimatrixGame, tol: &Tolerance) -> Result<EquilibriumSet, Error> {
    enumerate_equilibria_capped(g, ORACLE_SIZE_CAP, tol)
}

/// Enumeration with an explicit size cap.
pub fn enumerate_equilibria_capped(
    g: &BimatrixGame,
    cap: usize,
    tol: &Tolerance,
) -> Result<EquilibriumSet, Error> {
    let (m, n) = (g.m(), g.n());
    if m > cap || n > cap {
        return Err(Error::SizeCap { m, n, cap });
    }
    let a = g.a.inner();
    let b = g.b.inner();
    let mut profiles: Vec<MixedProfile> = Vec::new();
    let mut degenerate = false;

    for k in 1..=m.min(n) {
        for rows in combinations(m, k) {
            for cols in combinations(n, k) {
                match solve_support_pair(a, b, &rows, &cols, tol) {
                    SupportOutcome::Equilibrium { p, q, boundary } => {
                        degenerate |= boundary;
                        let v1 = (p.transpose() * a * &q)[(0, 0)];
                        let v2 = (p.transpose() * b * &q)[(0, 0)];
                        // Nondegeneracy: no more pure best responses than
                        // the support size.
                        let br_rows = (a * &q)
                            .iter()
                            .filter(|&&x| x >= v1 - BEST_RESPONSE_TOL)
                            .count();
                        let br_cols = (b.transpose() * &p)
                            .iter()
                            .filter(|&&x| x >= v2 - BEST_RESPONSE_TOL)
                            .count();
                        if br_rows > k || br_cols > k {
                            degenerate = true;
                        }
                        if !profiles.iter().any(|e| profiles_match(e, &p, &q)) {
                            profiles.push(MixedProfile { p, q, payoff1: v1, payoff2: v2 });
                        }
                    }
                    SupportOutcome::RankDeficient => degenerate = true,
                    SupportOutcome::NotAnEquilibrium => {}
                }
            }
        }
    }
    Ok(EquilibriumSet { profiles, degenerate })
}

/// Set equality of the two games' equilibrium sets (Nash-set equivalence),
/// by greedy matching within the profile tolerance. Errors when either
/// enumeration reports degeneracy: the sets are then not trustworthy.
pub fn equivalent(g1: &BimatrixGame, g2: &BimatrixGame, tol: &Tolerance) -> Result<bool, Error> {
    if g1.m() != g2.m() || g1.n() != g2.n() {
        return Err(Error::Shape(format!(
            "games must share a shape: {}x{} vs {}x{}",
            g1.m(),
            g1.n(),
            g2.m(),
            g2.n()
        )));
    }
    let s1 = enumerate_equilibria(g1, tol)?;
    let s2 = enumerate_equilibria(g2, tol)?;
    if s1.degenerate || s2.degenerate {
        return Err(Error::Degenerate);
    }
    if s1.profiles.len() != s2.profiles.len() {
        return Ok(false);
    }
    let mut used = vec![false; s2.profiles.len()];
    for e1 in &s1.profiles {
        let found = s2.profiles.iter().enumerate().find(|(j, e2)| {
            !used[*j] && profiles_match(e2, &e1.p, &e1.q)
        });
        match found {
            Some((j, _)) => used[j] = true,
            None => return Ok(false),
        }
    }
    Ok(true)
}

fn profiles_match(e: &MixedProfile, p: &DVector<f64>, q: &DVector<f64>) -> bool {
    let dp = (&e.p - p).amax();
    let dq = (&e.q - q).amax();
    dp <= PROFILE_TOL && dq <= PROFILE_TOL
}

enum SupportOutcome {
    Equilibrium { p: DVector<f64>, q: DVector<f64>, boundary: bool },
    RankDeficient,
    NotAnEquilibrium,
}

/// Solves the two indifference systems of a support pair and validates the
/// candidate against Definition-1 best-response conditions.
fn solve_support_pair(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    rows: &[usize],
    cols: &[usize],
    tol: &Tolerance,
) -> SupportOutcome {
    let k = rows.len();
    let (m, n) = (a.nrows(), a.ncols());

    // Player 1 indifferent across `rows` against q on `cols`:
    // [A_ST  -1; 1^T  0] (q, v) = (0, 1).
    let a_st = submatrix(a, rows, cols);
    let q_sub = match solve_indifference(&a_st, tol) {
        Ok(Some(x)) => x,
        Ok(None) => return SupportOutcome::NotAnEquilibrium,
        Err(()) => return SupportOutcome::RankDeficient,
    };
    // Player 2 indifferent across `cols` against p on `rows`: same system
    // on B restricted and transposed.
    let b_ts = submatrix(b, rows, cols).transpose();
    let p_sub = match solve_indifference(&b_ts, tol) {
        Ok(Some(x)) => x,
        Ok(None) => return SupportOutcome::NotAnEquilibrium,
        Err(()) => return SupportOutcome::RankDeficient,
    };

    let mut boundary = false;
    let mut embed = |sub: &DVector<f64>, idx: &[usize], len: usize| -> Option<DVector<f64>> {
        let mut full = DVector::zeros(len);
        for (pos, &i) in idx.iter().enumerate() {
            let v = sub[pos];
            if v < -CLAMP_TOL {
                return None;
            }
            if v.abs() <= PROFILE_TOL {
                boundary = true;
            }
            full[i] = v.max(0.0);
        }
        Some(full)
    };
    let q = match embed(&q_sub, cols, n) {
        Some(v) => v,
        None => return SupportOutcome::NotAnEquilibrium,
    };
    let p = match embed(&p_sub, rows, m) {
        Some(v) => v,
        None => return SupportOutcome::NotAnEquilibrium,
    };

    // Definition-1 check against every pure deviation.
    let v1 = (p.transpose() * a * &q)[(0, 0)];
    let v2 = (p.transpose() * b * &q)[(0, 0)];
    let aq = a * &q;
    if aq.iter().any(|&x| x > v1 + BEST_RESPONSE_TOL) {
        return SupportOutcome::NotAnEquilibrium;
    }
    let ptb = b.transpose() * &p;
    if ptb.iter().any(|&x| x > v2 + BEST_RESPONSE_TOL) {
        return SupportOutcome::NotAnEquilibrium;
    }
    let _ = k;
    SupportOutcome::Equilibrium { p, q, boundary }
}

/// Solves `[M  -1; 1^T  0] (x, v) = (0, 1)`: a distribution making the
/// opponent indifferent across the support rows of `M`.
///
/// `Ok(None)` when inconsistent, `Err(())` when the square system is
/// rank-deficient (degenerate support).
fn solve_indifference(m_st: &DMatrix<f64>, tol: &Tolerance) -> Result<Option<DVector<f64>>, ()> {
    let k = m_st.nrows();
    let mut sys = DMatrix::zeros(k + 1, k + 1);
    sys.view_mut((0, 0), (k, k)).copy_from(m_st);
    for i in 0..k {
        sys[(i, k)] = -1.0;
        sys[(k, i)] = 1.0;
    }
    let sys = Matrix::wrap(sys);
    if sys.rank(tol) < k + 1 {
        return Err(());
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    match sys.solve(&rhs, tol) {
        Some(sol) => Ok(Some(sol.rows(0, k).clone_owned())),
        None => Ok(None),
    }
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// All k-subsets of {0, .., n-1} in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{apply_pat, PatParams};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn game(a: Matrix, b: Matrix) -> BimatrixGame {
        BimatrixGame::new(a, b).unwrap()
    }

    fn random_game(m: usize, n: usize, seed: u64) -> BimatrixGame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rnd = |r: usize, c: usize| {
            Matrix::wrap(DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0)))
        };
        let a = rnd(m, n);
        let b = rnd(m, n);
        game(a, b)
    }

    #[test]
    fn matching_pennies_unique_mixed() {
        let tol = Tolerance::relaxed();
        let a = mat(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let b = Matrix::new(-a.inner()).unwrap();
        let set = enumerate_equilibria(&game(a, b), &tol).unwrap();
        assert!(!set.degenerate);
        assert_eq!(set.profiles.len(), 1);
        let e = &set.profiles[0];
        for i in 0..2 {
            assert_abs_diff_eq!(e.p[i], 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(e.q[i], 0.5, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(e.payoff1, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.payoff2, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn dominant_strategy_pure_equilibrium() {
        let tol = Tolerance::relaxed();
        let c = mat(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let set = enumerate_equilibria(&game(c.clone(), c), &tol).unwrap();
        let has_pure = set
            .profiles
            .iter()
            .any(|e| (e.p[0] - 1.0).abs() <= 1e-9 && (e.q[0] - 1.0).abs() <= 1e-9);
        assert!(has_pure);
    }

    #[test]
    fn random_nondegenerate_games_have_odd_counts() {
        let tol = Tolerance::relaxed();
        let mut checked = 0;
        for seed in 0..40u64 {
            let g = random_game(3, 3, seed);
            let set = enumerate_equilibria(&g, &tol).unwrap();
            if set.degenerate {
                continue;
            }
            checked += 1;
            assert!(!set.profiles.is_empty(), "existence violated at seed {seed}");
            assert_eq!(set.profiles.len() % 2, 1, "even count at seed {seed}");
        }
        assert!(checked >= 30, "too many degenerate draws: {checked}/40");
    }

    #[test]
    fn profiles_satisfy_best_response_and_simplex_invariants() {
        let tol = Tolerance::relaxed();
        for seed in 100..120u64 {
            let g = random_game(4, 3, seed);
            let set = enumerate_equilibria(&g, &tol).unwrap();
            for e in &set.profiles {
                assert!(e.p.iter().all(|&x| x >= 0.0));
                assert!(e.q.iter().all(|&x| x >= 0.0));
                assert_abs_diff_eq!(e.p.sum(), 1.0, epsilon = 1e-9);
                assert_abs_diff_eq!(e.q.sum(), 1.0, epsilon = 1e-9);
                let aq = g.a.inner() * &e.q;
                assert!(aq.iter().all(|&x| x <= e.payoff1 + BEST_RESPONSE_TOL));
                let ptb = g.b.inner().transpose() * &e.p;
                assert!(ptb.iter().all(|&x| x <= e.payoff2 + BEST_RESPONSE_TOL));
            }
        }
    }

    #[test]
    fn pat_preserves_equilibrium_sets() {
        let tol = Tolerance::relaxed();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut done = 0;
        let mut seed = 0u64;
        while done < 25 {
            seed += 1;
            let g = random_game(3, 3, 1000 + seed);
            let p = PatParams {
                alpha1: rng.random_range(0.2..3.0),
                alpha2: rng.random_range(0.2..3.0),
                beta1: rng.random_range(-2.0..2.0),
                beta2: rng.random_range(-2.0..2.0),
                u: DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0)),
                v: DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0)),
            };
            let h = apply_pat(&g, &p).unwrap();
            match equivalent(&g, &h, &tol) {
                Ok(eq) => {
                    assert!(eq, "PAT changed the equilibrium set at seed {seed}");
                    done += 1;
                }
                Err(Error::Degenerate) => continue,
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn equivalence_is_reflexive_and_distinguishes_games() {
        let tol = Tolerance::relaxed();
        let mp_a = mat(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let mp = game(mp_a.clone(), Matrix::new(-mp_a.inner()).unwrap());
        assert!(equivalent(&mp, &mp, &tol).unwrap());

        let coord = game(Matrix::identity(2), Matrix::identity(2));
        assert!(!equivalent(&mp, &coord, &tol).unwrap());
    }

    #[test]
    fn size_cap_is_enforced() {
        let tol = Tolerance::relaxed();
        let g = random_game(6, 6, 3);
        match enumerate_equilibria(&g, &tol) {
            Err(Error::SizeCap { m: 6, n: 6, cap: 5 }) => {}
            other => panic!("expected size-cap error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_games_refuse_comparison() {
        let tol = Tolerance::relaxed();
        // Duplicate-row game: column player's best responses tie everywhere.
        let c = mat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let g = game(c.clone(), c);
        let set = enumerate_equilibria(&g, &tol).unwrap();
        assert!(set.degenerate);
        match equivalent(&g, &g, &tol) {
            Err(Error::Degenerate) => {}
            other => panic!("expected degeneracy error, got {other:?}"),
        }
    }

    #[test]
    fn equilibrium_set_serializes_with_payoff_pairs() {
        let tol = Tolerance::relaxed();
        let a = mat(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let b = Matrix::new(-a.inner()).unwrap();
        let set = enumerate_equilibria(&game(a, b), &tol).unwrap();
        let json = serde_json::to_value(&set).unwrap();
        assert_eq!(json["degenerate"], serde_json::json!(false));
        let prof = &json["profiles"][0];
        assert!(prof["p"].is_array());
        assert!(prof["q"].is_array());
        assert_eq!(prof["payoffs"].as_array().unwrap().len(), 2);
    }
}

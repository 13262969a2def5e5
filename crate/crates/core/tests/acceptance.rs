//! Acceptance suite: one test (and one pass/fail line) per criterion, with
//! the counts and tolerances pinned to the contract values.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gamerank::oracle::enumerate_equilibria;
use gamerank::reduction::ReductionPath;
use gamerank::{
    check_square_limit, rank_at, reduce, reduce_one_step_row, sample_planted_pat,
    sample_square_game, sample_structured_rect_game, span_preserved, twcf_spectrum,
    wedderburn_step, BimatrixGame, Error, Matrix, PlantedPat, ReductionCertificate, Tolerance,
};
use gamerank::{default_probes, rank_reducing_process};

fn tol() -> Tolerance {
    Tolerance::relaxed()
}

fn report(n: usize, name: &str) {
    println!("criterion {n} ({name}): PASS");
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::new(DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

fn random_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

fn random_game(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> BimatrixGame {
    BimatrixGame::new(random_matrix(rows, cols, rng), random_matrix(rows, cols, rng)).unwrap()
}

/// Criterion 1: 1,000 fuzzed Wedderburn steps with a valid pivot drop the
/// rank by exactly one; total runtime under 10 seconds.
#[test]
fn criterion_1_wedderburn_step_exactness() {
    let tol = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let start = Instant::now();
    let mut done = 0usize;
    while done < 1000 {
        let m = rng.random_range(2..=8usize);
        let n = rng.random_range(2..=8usize);
        let c = random_matrix(m, n, &mut rng);
        let x = random_vector(n, &mut rng);
        let y = random_vector(m, &mut rng);
        let (c2, _) = match wedderburn_step(&c, &x, &y, &tol) {
            Ok(v) => v,
            Err(Error::ZeroPivot) => continue,
            Err(e) => panic!("unexpected error: {e}"),
        };
        let scale = c.inner().norm();
        let before = c.rank(&tol);
        let after = c2.rank_scaled(scale, &tol);
        assert_eq!(after, before - 1, "rank did not drop by one (trial {done})");
        done += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime budget exceeded: {elapsed:?}");
    report(1, "wedderburn step exactness");
}

/// Criterion 2: 200 full rank-reducing trails on matrices up to 8x10
/// terminate in exactly rank(C) steps with reassembly error at 1e-9.
#[test]
fn criterion_2_rank_reducing_process() {
    let tol = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    for trial in 0..200 {
        let m = rng.random_range(2..=8usize);
        let n = rng.random_range(2..=10usize);
        let c = random_matrix(m, n, &mut rng);
        let trail = rank_reducing_process(&c, default_probes, &tol).unwrap();
        assert_eq!(trail.updates.len(), c.rank(&tol), "wrong step count (trial {trial})");
        let err = (c.inner() - trail.sum_of_updates().inner()).norm();
        assert!(
            err <= 1e-9 * c.inner().norm(),
            "reassembly error {err:e} too large (trial {trial})"
        );
    }
    report(2, "rank-reducing process");
}

/// Criterion 3: 1,000 fuzzed span-preservation instances; the predicate
/// agrees with the direct post-step column-span test in both directions.
#[test]
fn criterion_3_span_preservation_iff() {
    let tol = Tolerance { rank_tol: 1e-9, eig_tol: 1e-8, residual_tol: 1e-9 };
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    let mut done = 0usize;
    while done < 1000 {
        let m = rng.random_range(2..=6usize);
        let n = rng.random_range(2..=6usize);
        let c = random_matrix(m, n, &mut rng);
        let x1 = random_vector(n, &mut rng);
        let y1 = random_vector(m, &mut rng);
        let (c2, _) = match wedderburn_step(&c, &x1, &y1, &tol) {
            Ok(v) => v,
            Err(_) => continue,
        };
        // Mix in-span and generic z: project a random vector onto the row
        // span half the time, optionally orthogonalized against x1.
        let mut z = random_vector(n, &mut rng);
        if rng.random_bool(0.5) {
            z = c.inner().transpose() * (c.inner() * &z);
        }
        if rng.random_bool(0.5) {
            let x1n = x1.norm_squared();
            z -= &x1 * (z.dot(&x1) / x1n);
        }
        if z.norm() < 1e-6 {
            continue;
        }
        let predicted = span_preserved(&c, &x1, &z, &tol);
        let direct = c2.transpose().in_column_span(&z, &tol);
        assert_eq!(predicted, direct, "iff disagreement (instance {done})");
        done += 1;
    }
    report(3, "span preservation iff");
}

/// Criterion 4: 500 pencils (random and planted); the rank formula matches
/// the direct numerical rank at every spectrum point and at 5 off-spectrum
/// samples each.
#[test]
fn criterion_4_rank_formula() {
    let tol = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    for trial in 0..500 {
        let (a, b) = if trial % 2 == 0 {
            let m = rng.random_range(2..=6usize);
            let n = rng.random_range(2..=6usize);
            (random_matrix(m, n, &mut rng), random_matrix(m, n, &mut rng))
        } else {
            // Planted: the payoff-sum pencil of a planted PAT instance has
            // a known positive rank-reducing value.
            let gamma = rng.random_range(0.2..5.0);
            let planted = sample_planted_pat(4, 6, 0, gamma, 0xB000 + trial as u64).unwrap();
            (planted.transformed.a.clone(), planted.transformed.b.clone())
        };
        let spectrum = twcf_spectrum(&a, &b, &tol).unwrap();
        let direct = |lambda: f64| {
            let scale = a.inner().norm() + lambda.abs() * b.inner().norm();
            Matrix::new(a.inner() + b.inner() * lambda).unwrap().rank_scaled(scale, &tol)
        };
        for e in &spectrum.eigenvalues {
            if e.value.im != 0.0 {
                continue;
            }
            let lambda = e.value.re;
            assert_eq!(
                rank_at(lambda, &spectrum),
                direct(lambda),
                "formula mismatch at spectrum point {lambda} (trial {trial})"
            );
        }
        for _ in 0..5 {
            let lambda = rng.random_range(-4.0..4.0);
            if spectrum.multiplicity_at(lambda) > 0 {
                continue;
            }
            assert_eq!(
                rank_at(lambda, &spectrum),
                direct(lambda),
                "formula mismatch off-spectrum at {lambda} (trial {trial})"
            );
        }
    }
    report(4, "rank formula");
}

fn pipeline_certificates(count: usize, seed: u64) -> Vec<(BimatrixGame, ReductionCertificate)> {
    let tol = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let m = rng.random_range(2..=4usize);
        let n = rng.random_range(2..=4usize);
        let g = random_game(m, n, &mut rng);
        if g.game_rank(&tol) == 0 {
            continue;
        }
        let cert = match reduce(&g, &tol) {
            Ok(c) if c.path != ReductionPath::None => c,
            _ => continue,
        };
        out.push((g, cert));
    }
    out
}

/// Criterion 5: for 500 nondegenerate random games up to 4x4 that the
/// pipeline modifies, the oracle confirms identical equilibrium sets on
/// input and output; runtime under 60 seconds.
#[test]
fn criterion_5_pipeline_soundness() {
    let tol = tol();
    let start = Instant::now();
    let mut verified = 0usize;
    let mut seed = 0u64;
    while verified < 500 {
        seed += 1;
        let batch = pipeline_certificates(1, 0xC000 + seed);
        let (g, cert) = &batch[0];
        let reduced = cert.reduced_in_input_orientation();
        let s1 = enumerate_equilibria(g, &tol).unwrap();
        let s2 = enumerate_equilibria(&reduced, &tol).unwrap();
        if s1.degenerate || s2.degenerate {
            continue;
        }
        assert_eq!(
            s1.profiles.len(),
            s2.profiles.len(),
            "equilibrium count changed (seed {seed})"
        );
        for e1 in &s1.profiles {
            let matched = s2.profiles.iter().any(|e2| {
                (&e1.p - &e2.p).amax() <= 1e-7 && (&e1.q - &e2.q).amax() <= 1e-7
            });
            assert!(matched, "equilibrium lost by reduction (seed {seed})");
        }
        verified += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime budget exceeded: {elapsed:?}");
    report(5, "pipeline soundness");
}

fn planted_instances(count: usize, seed: u64) -> Vec<PlantedPat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let base_rank = (i % 2) as usize;
            let gamma = rng.random_range(0.1..10.0);
            let m = rng.random_range(base_rank + 3..=5usize);
            let n = rng.random_range(m.max(5)..=8usize);
            sample_planted_pat(m, n, base_rank, gamma, 0xD000 + i as u64).unwrap()
        })
        .collect()
}

/// Criterion 6: 100 planted PAT games (rank-0 and rank-1 bases, random
/// gamma in [0.1, 10]); the pipeline recovers a rank no larger than the
/// base's, and gamma* within 1e-6 relative whenever the pencil fires.
#[test]
fn criterion_6_planted_round_trip() {
    let tol = tol();
    for (i, planted) in planted_instances(100, 0xA6).iter().enumerate() {
        let base_rank = planted.base.game_rank(&tol);
        let cert = reduce(&planted.transformed, &tol).unwrap();
        assert!(
            cert.rank_after <= base_rank,
            "rank {} above base rank {base_rank} (instance {i})",
            cert.rank_after
        );
        let fired = cert.gamma_star != 1.0;
        if fired {
            let rel = (cert.gamma_star - planted.gamma).abs() / planted.gamma;
            assert!(
                rel <= 1e-6,
                "gamma* {} vs planted {} (rel {rel:e}, instance {i})",
                cert.gamma_star,
                planted.gamma
            );
        }
    }
    report(6, "planted round trip");
}

fn full_row_rank_certificates(count: usize, seed: u64) -> Vec<(BimatrixGame, ReductionCertificate)> {
    let tol = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let m = rng.random_range(2..=8usize);
        let n = rng.random_range(m..=8usize);
        let g = random_game(m, n, &mut rng);
        if g.game_rank(&tol) != m {
            continue;
        }
        let cert = reduce_one_step_row(&g, &tol)
            .unwrap_or_else(|| panic!("one-step reduction failed on a full-row-rank game"));
        assert_eq!(cert.rank_after, m - 1);
        out.push((g, cert));
    }
    out
}

/// Criterion 7: 200 games with full row rank payoff sum (m <= n <= 8); the
/// one-step reduction always succeeds with rank m - 1.
#[test]
fn criterion_7_one_step_totality() {
    let certs = full_row_rank_certificates(200, 0xA7);
    assert_eq!(certs.len(), 200);
    report(7, "one-step totality");
}

fn square_certificates(count: usize, seed: u64) -> Vec<(BimatrixGame, ReductionCertificate)> {
    let tol = tol();
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let m = rng.random_range(2..=6usize);
        let g = sample_square_game(m, seed.wrapping_add(1 + i as u64)).unwrap();
        assert!(check_square_limit(&g, &tol).unwrap(), "limit predicate false (trial {i})");
        let cert = reduce(&g, &tol).unwrap();
        assert_eq!(cert.rank_after, m - 1, "square game not reduced to m - 1 (trial {i})");
        out.push((g, cert));
    }
    out
}

/// Criterion 8: 200 random full-rank square games satisfy the limit
/// predicate and reduce by exactly one; a planted cofactor-sum-zero
/// witness is classified as the measure-zero exception.
#[test]
fn criterion_8_square_generic_limit() {
    let tol = tol();
    let certs = square_certificates(200, 0xA8);
    assert_eq!(certs.len(), 200);

    // diag(1, -1): C^{-1} 1 = (1, -1) is orthogonal to 1, so the predicate
    // is false and a two-step shift exists.
    let c = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
    let witness = BimatrixGame::new(c, Matrix::zeros(2, 2)).unwrap();
    assert!(!check_square_limit(&witness, &tol).unwrap());
    let cert = reduce(&witness, &tol).unwrap();
    assert_eq!(cert.path, ReductionPath::TwoStep);
    assert_eq!(cert.rank_after, 0);
    report(8, "square generic limit");
}

fn structured_certificates(count: usize, seed: u64) -> Vec<(BimatrixGame, ReductionCertificate)> {
    let tol = tol();
    let sizes = [(4usize, 6usize, 3usize), (4, 6, 4), (5, 8, 5)];
    let mut out = Vec::new();
    for i in 0..count {
        let (m, n, k) = sizes[i % sizes.len()];
        let g = sample_structured_rect_game(m, n, k, seed.wrapping_add(i as u64), false).unwrap();
        let cert = reduce(&g, &tol).unwrap();
        assert_eq!(
            cert.rank_after,
            k - 2,
            "structured game not reduced to k - 2 (trial {i}, size {m}x{n}, k = {k})"
        );
        out.push((g, cert));
    }
    out
}

/// Criterion 9: 200 structured rectangular games over the pinned sizes all
/// reduce to rank k - 2.
#[test]
fn criterion_9_structured_two_step() {
    let certs = structured_certificates(200, 0xA9);
    assert_eq!(certs.len(), 200);
    report(9, "structured two-step");
}

/// Criterion 10: every certificate from criteria 5-9 passes independent
/// replay (the batches are regenerated from the same seeds, so the set of
/// certificates is identical).
#[test]
fn criterion_10_certificate_replay() {
    let tol = tol();
    let mut all: Vec<(BimatrixGame, ReductionCertificate)> = Vec::new();
    let mut seed = 0u64;
    let mut picked = 0usize;
    while picked < 500 {
        seed += 1;
        let batch = pipeline_certificates(1, 0xC000 + seed);
        let (g, cert) = &batch[0];
        let s1 = enumerate_equilibria(g, &tol).unwrap();
        let s2 = enumerate_equilibria(&cert.reduced_in_input_orientation(), &tol).unwrap();
        if s1.degenerate || s2.degenerate {
            continue;
        }
        picked += 1;
        all.push(batch.into_iter().next().unwrap());
    }
    for planted in planted_instances(100, 0xA6) {
        let cert = reduce(&planted.transformed, &tol).unwrap();
        all.push((planted.transformed, cert));
    }
    all.extend(full_row_rank_certificates(200, 0xA7));
    all.extend(square_certificates(200, 0xA8));
    all.extend(structured_certificates(200, 0xA9));
    for (i, (g, cert)) in all.iter().enumerate() {
        assert!(cert.replay(g, &tol), "replay failed for certificate {i}");
    }
    report(10, "certificate replay");
}

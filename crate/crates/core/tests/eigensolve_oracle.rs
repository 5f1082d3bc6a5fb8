use bloch_nitsche::eigensolve::{count_below, residual_norm, solve_dense, solve_smallest, EigenOptions};
use bloch_nitsche::linalg::CsrMatrix;
use bloch_nitsche::Cx;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sparse Hermitian `A` (banded plus random couplings) and diagonally dominant `B`.
fn random_pair(n: usize, seed: u64) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    for i in 0..n {
        ta.push((i, i, Cx::new(rng.gen_range(0.0..10.0), 0.0)));
        tb.push((i, i, Cx::new(rng.gen_range(2.0..3.0), 0.0)));
        let couple = |rng: &mut ChaCha8Rng, j: usize, t: &mut Vec<(usize, usize, Cx<f64>)>, s: f64| {
            let z = Cx::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
            t.push((i, j, z));
            t.push((j, i, z.conj()));
        };
        if i + 1 < n {
            couple(&mut rng, i + 1, &mut ta, 1.0);
            couple(&mut rng, i + 1, &mut tb, 0.4);
        }
        let j = rng.gen_range(0..n);
        if j != i {
            couple(&mut rng, j, &mut ta, 0.5);
        }
    }
    (CsrMatrix::from_triplets(n, n, ta), CsrMatrix::from_triplets(n, n, tb))
}

#[test]
fn krylov_matches_dense_on_random_pencils() {
    for seed in 0..5 {
        let (a, b) = random_pair(50, seed);
        let dense = solve_dense(&a, &b, 100).unwrap();
        let opts = EigenOptions {
            shift: -20.0,
            ..EigenOptions::default()
        };
        let r = solve_smallest(&a, &b, 6, &opts).unwrap();
        for (i, (got, want)) in r.eigenvalues.iter().zip(&dense.eigenvalues).enumerate() {
            assert!(
                (got - want).abs() < 1e-8 * want.abs().max(1.0),
                "seed {seed} mode {i}: {got} vs {want}"
            );
        }
        for (x, &e) in r.eigenvectors.iter().zip(&r.eigenvalues) {
            let xn = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(residual_norm(&a, &b, x, e) <= 1e-9 * a.max_abs() * xn * 10.0);
        }
    }
}

#[test]
fn full_spectrum_trace_identity() {
    // With B = I the eigenvalues sum to tr A.
    let (a, _) = random_pair(40, 11);
    let r = solve_dense(&a, &CsrMatrix::identity(40), 100).unwrap();
    let trace: f64 = (0..40).map(|i| a.get(i, i).re).sum();
    let sum: f64 = r.eigenvalues.iter().sum();
    assert!((trace - sum).abs() < 1e-10 * trace.abs());
}

#[test]
fn inertia_agrees_with_dense_count() {
    let (a, b) = random_pair(60, 3);
    let dense = solve_dense(&a, &b, 100).unwrap();
    for sigma in [-1.0, 0.5, 2.0, 4.0] {
        let want = dense.eigenvalues.iter().filter(|&&e| e < sigma).count();
        assert_eq!(count_below(&a, &b, sigma).unwrap(), want, "sigma {sigma}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn smallest_pairs_are_sorted_and_b_normalized(seed in 0u64..10_000, nev in 1usize..6) {
        let (a, b) = random_pair(36, seed);
        let opts = EigenOptions { shift: -20.0, ..EigenOptions::default() };
        let r = solve_smallest(&a, &b, nev, &opts).unwrap();
        prop_assert_eq!(r.len(), nev);
        prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        for x in &r.eigenvectors {
            let bn = b.quadratic_form(x).re;
            prop_assert!((bn - 1.0).abs() < 1e-8);
        }
    }
}

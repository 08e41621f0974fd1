mod common;

use common::{from_mat, to_mat};
use proptest::prelude::*;
use rand::Rng;
use reweight_core::linalg::{
    arrowhead_eigen, is_doubly_nonnegative, logdet, psd_sqrt, symmetric_eigenvalues, woodbury_resolvent,
    woodbury_sandwich_resolvent, SpectralFactorization, SymmetricMatrix,
};
use reweight_core::Error;
use reweight_testkit::{dense, gen, Mat};

fn random_symmetric(rng: &mut impl Rng, n: usize) -> Mat {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
    (&a + a.transpose()) * 0.5
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = gen::rng(11);
    for k in 0..100 {
        let n = 1 + k % 30;
        let a = random_symmetric(&mut rng, n);
        let ours = symmetric_eigenvalues(&from_mat(&a)).unwrap();
        let oracle = dense::eigenvalues(&a);
        let scale = 1.0 + oracle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in ours.iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-12 * scale, "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn spectral_factorization_reconstructs() {
    let mut rng = gen::rng(12);
    for k in 0..50 {
        let n = 1 + k % 25;
        let a = from_mat(&random_symmetric(&mut rng, n));
        let f = SpectralFactorization::new(&a).unwrap();
        let maxabs = f.eigvals().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = f.reconstruct().sub(&a).frobenius_norm();
        assert!(err <= 1e-10 * (1.0 + maxabs), "reconstruction error {err}");
    }
}

#[test]
fn clustered_and_graded_spectra() {
    // Repeated eigenvalues and wide dynamic range stress the QL deflation.
    let mut rng = gen::rng(13);
    for n in [2, 5, 12, 30] {
        let diag: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 10f64.powi(-i / 2) }).collect();
        let a = gen::with_spectrum(&mut rng, &diag);
        let ours = symmetric_eigenvalues(&from_mat(&a)).unwrap();
        let mut want = diag;
        want.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in ours.iter().zip(&want) {
            assert!((x - y).abs() <= 1e-13, "{x} vs {y}");
        }
    }
}

#[test]
fn psd_sqrt_squares_back() {
    let mut rng = gen::rng(14);
    for k in 0..100 {
        let n = 1 + k % 20;
        let a = gen::spd(&mut rng, n, 0.0);
        let s = psd_sqrt(&from_mat(&a)).unwrap();
        let ss = to_mat(&s) * to_mat(&s);
        assert!(dense::rel_frobenius(&ss, &a) <= 1e-9);
    }
    // The documented 5×5 case: A = BᵀB from a seeded B.
    let b = Mat::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
    let a = b.transpose() * &b;
    let s = to_mat(&psd_sqrt(&from_mat(&a)).unwrap());
    assert!(dense::rel_frobenius(&(&s * &s), &a) <= 1e-9);
}

#[test]
fn logdet_matches_eigenvalue_product() {
    let mut rng = gen::rng(15);
    for _ in 0..20 {
        let a = gen::spd(&mut rng, 4, 0.5);
        let want: f64 = dense::eigenvalues(&a).iter().map(|l| l.ln()).sum();
        assert!((logdet(&from_mat(&a)).unwrap() - want).abs() <= 1e-10);
    }
    for n in 1..6 {
        assert_eq!(logdet(&SymmetricMatrix::identity(n)).unwrap(), 0.0);
    }
    let bad = SymmetricMatrix::from_diagonal(&[1.0, -1.0]);
    assert!(matches!(logdet(&bad), Err(Error::NotPositiveDefinite { .. })));
}

#[test]
fn arrowhead_three_four_against_dense_eigensolver() {
    let v = arrowhead_eigen(&[3.0, 4.0]).unwrap();
    let ev = dense::eigenvalues(&dense::arrowhead(&[3.0, 4.0]));
    assert!((ev[0] - 5.0).abs() < 1e-12 && ev[1].abs() < 1e-12 && (ev[2] + 5.0).abs() < 1e-12);
    assert_eq!(v.eigvals(), [5.0, -5.0]);
}

#[test]
fn arrowhead_factorization_invariants() {
    let mut rng = gen::rng(16);
    for k in 0..100 {
        let l = gen::losses(&mut rng, 1 + k % 40, 10.0, 0.2);
        let v = arrowhead_eigen(&l).unwrap();
        let n = v.dim();
        for a in 0..2 {
            for b in 0..2 {
                let dot: f64 = (0..n).map(|i| v.q(i, a) * v.q(i, b)).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() <= 1e-12);
            }
        }
        let [p, m] = v.eigvals();
        let dense_v = to_mat(&v.dense());
        let recon = Mat::from_fn(n, n, |i, j| p * v.q(i, 0) * v.q(j, 0) + m * v.q(i, 1) * v.q(j, 1));
        assert!((recon - &dense_v).norm() <= 1e-10 * (1.0 + v.norm()));
        assert!(dense_v.trace() == 0.0);
    }
}

#[test]
fn woodbury_resolvent_matches_dense_inverse() {
    let mut rng = gen::rng(17);
    for k in 0..200 {
        let n = 2 + k % 29;
        let l = gen::losses(&mut rng, n - 1, 3.0, 0.1);
        let v = arrowhead_eigen(&l).unwrap();
        let gamma = v.norm() * (1.0 + rng.random_range(0.01..3.0)) + 1e-3;
        let ours = to_mat(&woodbury_resolvent(gamma, &v).unwrap());
        let want = dense::inverse(&(Mat::identity(n, n) * gamma - dense::arrowhead(&l)));
        assert!(dense::rel_frobenius(&ours, &want) <= 1e-9, "n={n}");
    }
}

#[test]
fn woodbury_sandwich_matches_dense_inverse() {
    let mut rng = gen::rng(18);
    for k in 0..200 {
        let n = 2 + k % 29;
        let omega = gen::dnn_pd(&mut rng, n, 0.05);
        let s = dense::sqrt_psd(&omega);
        let l = gen::losses(&mut rng, n - 1, 3.0, 0.1);
        let vd = dense::arrowhead(&l);
        let m = &s * &vd * &s;
        let lmax = dense::eigenvalues(&m)[0];
        let gamma = lmax * (1.0 + rng.random_range(0.01..3.0)) + 1e-3;
        let ours = to_mat(&woodbury_sandwich_resolvent(gamma, &from_mat(&s), &arrowhead_eigen(&l).unwrap()).unwrap());
        let want = dense::inverse(&(Mat::identity(n, n) - m / gamma));
        assert!(dense::rel_frobenius(&ours, &want) <= 1e-9, "n={n}");
    }
}

#[test]
fn woodbury_documented_cases() {
    // Zero loss.
    let v = arrowhead_eigen(&[0.0, 0.0]).unwrap();
    assert_eq!(woodbury_resolvent(2.0, &v).unwrap(), SymmetricMatrix::identity(3).scaled(0.5));

    // Near the singular point the result is still accurate to the conditioning.
    let v = arrowhead_eigen(&[1.0]).unwrap();
    let gamma = 1.0 + 1e-6;
    let ours = to_mat(&woodbury_resolvent(gamma, &v).unwrap());
    let a = Mat::identity(2, 2) * gamma - dense::arrowhead(&[1.0]);
    let cond = dense::eigenvalues(&a)[0] / dense::eigenvalues(&a)[1];
    assert!((cond - 2e6).abs() / 2e6 < 1e-3);
    assert!(dense::rel_frobenius(&ours, &dense::inverse(&a)) <= 1e-6);

    // Seeded 4×4 SPD Ω̂, γ = 1.5·λ_max.
    let mut rng = gen::rng(19);
    let omega = gen::dnn_pd(&mut rng, 4, 0.1);
    let s = dense::sqrt_psd(&omega);
    let l = [1.0, 2.0, 0.5];
    let m = &s * dense::arrowhead(&l) * &s;
    let gamma = 1.5 * dense::eigenvalues(&m)[0];
    let ours = to_mat(&woodbury_sandwich_resolvent(gamma, &from_mat(&s), &arrowhead_eigen(&l).unwrap()).unwrap());
    let want = dense::inverse(&(Mat::identity(4, 4) - m / gamma));
    assert!(dense::rel_frobenius(&ours, &want) <= 1e-10);

    // Precondition violated.
    let err = woodbury_sandwich_resolvent(0.9 * gamma / 1.5, &from_mat(&s), &arrowhead_eigen(&l).unwrap());
    assert!(matches!(err, Err(Error::OutOfDomain { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arrowhead_spectrum_is_plus_minus_norm(l in prop::collection::vec(0.0f64..100.0, 1..40)) {
        let v = arrowhead_eigen(&l).unwrap();
        let ev = dense::eigenvalues(&dense::arrowhead(&l));
        let s = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tol = 1e-9 * (1.0 + s);
        prop_assert!((ev[0] - s).abs() <= tol);
        prop_assert!((ev[ev.len() - 1] + s).abs() <= tol);
        prop_assert!(ev[1..ev.len() - 1].iter().all(|x| x.abs() <= tol));
        prop_assert!((v.norm() - s).abs() <= 1e-12 * (1.0 + s));
    }

    #[test]
    fn gram_of_nonnegative_factor_is_dnn(n in 1usize..12, seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let d = Mat::from_fn(n, n, |_, _| rng.random::<f64>());
        let m = from_mat(&(d.transpose() * d));
        prop_assert!(is_doubly_nonnegative(&m, 0.0).holds);
    }
}

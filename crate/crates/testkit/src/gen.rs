//! Seeded instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{to_row_major, Mat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `DᵀD/n + δI` with `D` entrywise uniform on `[0, 1)`: doubly nonnegative
/// and positive definite.
pub fn dnn_pd(rng: &mut impl Rng, n: usize, delta: f64) -> Mat {
    let d = Mat::from_fn(n, n, |_, _| rng.random::<f64>());
    let mut m = d.transpose() * &d / n as f64;
    for i in 0..n {
        m[(i, i)] += delta;
    }
    (&m + m.transpose()) * 0.5
}

/// `BᵀB + δI` with Gaussian-ish `B` (entries uniform on `[−1, 1)`).
pub fn spd(rng: &mut impl Rng, n: usize, delta: f64) -> Mat {
    let b = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut m = b.transpose() * &b;
    for i in 0..n {
        m[(i, i)] += delta;
    }
    (&m + m.transpose()) * 0.5
}

/// Gaussian-kernel Gram matrix over `n` points in `d` dimensions, with the
/// first point playing the query. A small jitter keeps it positive definite.
pub fn gaussian_gram(rng: &mut impl Rng, n: usize, d: usize, h2: f64) -> Mat {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut m = Mat::from_fn(n, n, |i, j| {
        let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / h2).exp()
    });
    for i in 0..n {
        m[(i, i)] += 1e-8;
    }
    m
}

/// Nonnegative losses on `[0, scale)`; each entry is zero with probability `p_zero`.
pub fn losses(rng: &mut impl Rng, n: usize, scale: f64, p_zero: f64) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<f64>() < p_zero { 0.0 } else { scale * rng.random::<f64>() })
        .collect()
}

pub fn row_major(m: &Mat) -> Vec<f64> {
    to_row_major(m)
}

/// A random permutation of `0..n` (Fisher-Yates).
pub fn permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Random orthogonal matrix (Q factor of a random square matrix).
pub fn orthogonal(rng: &mut impl Rng, n: usize) -> Mat {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

/// `Q diag(λ) Qᵀ` for a random orthogonal `Q`.
pub fn with_spectrum(rng: &mut impl Rng, eigenvalues: &[f64]) -> Mat {
    let q = orthogonal(rng, eigenvalues.len());
    let d = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(eigenvalues));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

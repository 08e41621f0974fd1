//! Symmetric eigensolver: Householder tridiagonalization followed by the
//! implicit QL iteration (the EISPACK `tred2`/`tql2` pair).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{SymmetricMatrix, PSD_TOL};
use crate::math;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SpectralFactorization {
    dim: usize,
    eigvals: Vec<f64>,
    // Row-major; column k is the unit eigenvector for eigvals[k].
    eigvecs: Vec<f64>,
}

impl SpectralFactorization {
    pub fn new(m: &SymmetricMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(invalid("eigendecomposition of a non-finite matrix"));
        }
        let (eigvals, eigvecs) = decompose(m, true);
        Ok(Self { dim: m.dim(), eigvals, eigvecs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// Component `i` of eigenvector `k`.
    #[inline]
    pub fn eigvec(&self, i: usize, k: usize) -> f64 {
        self.eigvecs[i * self.dim + k]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigvals[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigvals[self.dim - 1]
    }

    /// `Σₖ f(λₖ) vₖ vₖᵀ`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> SymmetricMatrix {
        let n = self.dim;
        let fl: Vec<f64> = self.eigvals.iter().map(|&l| f(l)).collect();
        SymmetricMatrix::from_upper_fn(n, |i, j| {
            (0..n).map(|k| self.eigvec(i, k) * fl[k] * self.eigvec(j, k)).sum()
        })
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.map(|l| l)
    }
}

/// Eigenvalues only, descending.
pub fn symmetric_eigenvalues(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(invalid("eigendecomposition of a non-finite matrix"));
    }
    Ok(decompose(m, false).0)
}

fn psd_floor(max_eig: f64) -> f64 {
    -PSD_TOL * max_eig.max(1.0)
}

/// Principal square root of a PSD matrix.
///
/// Eigenvalues in `[−1e-10·max(1, λ_max), 0)` are clamped to zero; anything
/// more negative is reported as [`Error::NotPsd`].
pub fn psd_sqrt(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let spec = SpectralFactorization::new(m)?;
    let min = spec.min_eigenvalue();
    if min < psd_floor(spec.max_eigenvalue()) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(spec.map(|l| math::sqrt(l.max(0.0))))
}

/// Outcome of [`is_doubly_nonnegative`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnnReport {
    pub holds: bool,
    pub min_entry: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// How far the most negative entry falls below `−tol` (0 if none does).
    pub entry_violation: f64,
    /// How far `λ_min` falls below `−tol·max(1, λ_max)` (0 if it does not).
    pub spectral_violation: f64,
}

/// Checks `min entry ≥ −tol` and `λ_min ≥ −tol·max(1, λ_max)`.
pub fn is_doubly_nonnegative(m: &SymmetricMatrix, tol: f64) -> DnnReport {
    let tol = tol.max(0.0);
    let min_entry = m.min_entry();
    let (min_eigenvalue, max_eigenvalue) = match symmetric_eigenvalues(m) {
        Ok(ev) => (ev[ev.len() - 1], ev[0]),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let entry_violation = (-tol - min_entry).max(0.0);
    let spectral_floor = -tol * max_eigenvalue.max(1.0);
    let spectral_violation = (spectral_floor - min_eigenvalue).max(0.0);
    let holds = min_entry >= -tol && min_eigenvalue >= spectral_floor;
    DnnReport { holds, min_entry, min_eigenvalue, max_eigenvalue, entry_violation, spectral_violation }
}

fn decompose(m: &SymmetricMatrix, want_vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let n = m.dim();
    let mut v = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return (vec![v[0]], vec![1.0]);
    }
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e, want_vectors);

    // Descending order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let eigvals: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let eigvecs = if want_vectors {
        let mut out = vec![0.0; n * n];
        for (new_k, &old_k) in order.iter().enumerate() {
            for i in 0..n {
                out[i * n + new_k] = v[i * n + old_k];
            }
        }
        out
    } else {
        Vec::new()
    };
    (eigvals, eigvecs)
}

// Householder reduction to tridiagonal form. On exit `v` holds the
// accumulated orthogonal transform, `d` the diagonal and `e[1..]` the
// subdiagonal.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += math::abs(d[k]);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = math::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e); rotations are applied to `v` when
// eigenvectors are requested.
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], want_vectors: bool) {
    let at = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(math::abs(d[l]) + math::abs(e[l]));
        let mut m = l;
        while m < n - 1 {
            if math::abs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            // QL sweeps converge in a handful of iterations per eigenvalue;
            // the cap only guards against non-finite input sneaking through.
            for _ in 0..(30 * n).max(60) {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = math::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = math::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            let h = v[at(k, i + 1)];
                            v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                            v[at(k, i)] = c * v[at(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(math::abs(e[l]) > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::math;

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    // Row-major, only the lower triangle is meaningful.
    l: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `a`; fails with [`Error::NotPositiveDefinite`] on the first
    /// non-positive (or non-finite) pivot.
    pub fn new(a: &SymmetricMatrix) -> Result<Self> {
        let n = a.dim();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = math::sqrt(d);
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { dim: n, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn factor(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[i * self.dim + j]
        }
    }

    /// `log det A = 2 Σ log Lᵢᵢ`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| 2.0 * math::ln(self.l[i * self.dim + i])).sum()
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_solve(&self, y: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward_solve(b);
        self.backward_solve(b);
    }

    pub fn inverse(&self) -> SymmetricMatrix {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.solve(&mut col);
            for i in 0..n {
                out[i * n + j] = col[i];
            }
        }
        SymmetricMatrix::symmetrize(n, &out)
    }

    /// Whitened matrix `L⁻¹ B L⁻ᵀ`.
    pub fn whiten(&self, b: &SymmetricMatrix) -> SymmetricMatrix {
        let n = self.dim;
        assert_eq!(b.dim(), n);
        // Y = L⁻¹ B, column by column; then X = L⁻¹ Yᵀ.
        let mut y = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b.get(i, j);
            }
            self.forward_solve(&mut col);
            for i in 0..n {
                y[i * n + j] = col[i];
            }
        }
        let mut x = vec![0.0; n * n];
        for j in 0..n {
            // column j of Yᵀ is row j of Y
            col.copy_from_slice(&y[j * n..(j + 1) * n]);
            self.forward_solve(&mut col);
            for i in 0..n {
                x[i * n + j] = col[i];
            }
        }
        SymmetricMatrix::symmetrize(n, &x)
    }
}

/// Log-determinant of a positive definite matrix via its Cholesky factor.
pub fn logdet(m: &SymmetricMatrix) -> Result<f64> {
    Ok(Cholesky::new(m)?.log_det())
}

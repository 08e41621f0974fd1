use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, invalid, Result};
use crate::math;

/// Dense real symmetric matrix.
///
/// Stored as a full row-major square. Every constructor and mutator writes
/// both `(i, j)` and `(j, i)`, so `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymmetricMatrix requires dim >= 1");
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = d;
        }
        m
    }

    /// Builds a matrix from its upper triangle: `f(i, j)` is called for `i <= j`.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a row-major square buffer that is symmetric up to
    /// `1e-10 · (1 + max|aᵢⱼ|)` and stores its symmetric part.
    pub fn from_row_major(dim: usize, data: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("matrix dimension must be at least 1"));
        }
        check_dim(dim * dim, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        let scale = 1.0 + data.iter().fold(0.0_f64, |m, &x| m.max(math::abs(x)));
        for i in 0..dim {
            for j in (i + 1)..dim {
                if math::abs(data[i * dim + j] - data[j * dim + i]) > 1e-10 * scale {
                    return Err(invalid("matrix is not symmetric"));
                }
            }
        }
        Ok(Self::from_upper_fn(dim, |i, j| 0.5 * (data[i * dim + j] + data[j * dim + i])))
    }

    /// Symmetric part `(A + Aᵀ)/2` of an arbitrary row-major square buffer.
    pub(crate) fn symmetrize(dim: usize, data: &[f64]) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self::from_upper_fn(dim, |i, j| 0.5 * (data[i * dim + j] + data[j * dim + i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    /// Row-major view of all `dim²` entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product `⟨A, B⟩ = Tr(AᵀB)`.
    pub fn inner(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "inner product of matrices with different dimensions");
        math::dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::norm2(&self.data)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &x| m.max(math::abs(x)))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * factor).collect() }
    }

    pub fn add(&self, other: &SymmetricMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_diagonal(&self, shift: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += shift;
        }
        m
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| math::dot(self.row(i), x)).collect()
    }

    /// `xᵀ A y`.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        math::dot(x, &self.mul_vec(y))
    }

    /// Dense product `A B`, row-major (not symmetric in general).
    pub fn matmul(&self, other: &SymmetricMatrix) -> Vec<f64> {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `A B A`, symmetrized to remove rounding asymmetry.
    pub fn sandwich(&self, middle: &SymmetricMatrix) -> SymmetricMatrix {
        let n = self.dim;
        let ab = self.matmul(middle);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = ab[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &self.data[k * n..(k + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        SymmetricMatrix::symmetrize(n, &out)
    }

    /// `P A Pᵀ` for the permutation `i ↦ perm[i]`, i.e. entry `(i, j)` of the
    /// result is entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SymmetricMatrix> {
        check_dim(self.dim, perm.len())?;
        let mut seen = vec![false; self.dim];
        for &p in perm {
            if p >= self.dim || seen[p] {
                return Err(invalid("not a permutation"));
            }
            seen[p] = true;
        }
        Ok(Self::from_upper_fn(self.dim, |i, j| self.get(perm[i], perm[j])))
    }
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymmetricMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_writes_mirror() {
        let mut m = SymmetricMatrix::zeros(3);
        m.set(0, 2, 5.0);
        assert_eq!(m.get(2, 0), 5.0);
    }

    #[test]
    fn rejects_asymmetric_buffers() {
        assert!(SymmetricMatrix::from_row_major(2, &[1.0, 2.0, 3.0, 1.0]).is_err());
        assert!(SymmetricMatrix::from_row_major(2, &[1.0, 2.0, 2.0]).is_err());
        let m = SymmetricMatrix::from_row_major(2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(m.get(1, 0), 2.0);
    }

    #[test]
    fn sandwich_matches_manual_product() {
        let a = SymmetricMatrix::from_row_major(2, &[2.0, 1.0, 1.0, 3.0]).unwrap();
        let b = SymmetricMatrix::from_row_major(2, &[1.0, 0.5, 0.5, 2.0]).unwrap();
        // A B A by hand.
        let ab = [2.5, 3.0, 2.5, 6.5];
        let expect = [ab[0] * 2.0 + ab[1], ab[0] + ab[1] * 3.0, ab[2] * 2.0 + ab[3], ab[2] + ab[3] * 3.0];
        let got = a.sandwich(&b);
        for (g, e) in got.as_slice().iter().zip(expect) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn permutation_validation() {
        let m = SymmetricMatrix::identity(3);
        assert!(m.permuted(&[0, 0, 1]).is_err());
        assert!(m.permuted(&[2, 1, 0]).is_ok());
    }
}

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{SymmetricMatrix, NEAR_SINGULAR_TOL};
use crate::math;

/// The loss matrix `V(β)`: zero except for the first row and column, which
/// carry the per-sample losses `ℓ₁ … ℓ_N`.
///
/// With `s = ‖ℓ‖` its only nonzero eigenvalues are `±s`, with eigenvectors
/// `(±s, ℓ)/(√2 s)`. Both are cached so that every downstream operation
/// stays `O(N²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowheadLoss {
    losses: Vec<f64>,
    norm: f64,
    // Row-major (N+1)×2; column 0 pairs with +norm, column 1 with −norm.
    q: Vec<f64>,
}

/// Builds the cached factorization of `V(β)` from its losses.
pub fn arrowhead_eigen(losses: &[f64]) -> Result<ArrowheadLoss> {
    if losses.is_empty() {
        return Err(invalid("arrowhead loss needs at least one sample"));
    }
    if let Some(bad) = losses.iter().find(|l| !l.is_finite() || **l < 0.0) {
        return Err(invalid(alloc::format!("losses must be finite and nonnegative, got {bad}")));
    }
    let n = losses.len() + 1;
    let norm = math::norm2(losses);
    let mut q = vec![0.0; 2 * n];
    if norm == 0.0 {
        q[0] = 1.0;
        q[3] = 1.0;
    } else {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        q[0] = r;
        q[1] = -r;
        for (i, &l) in losses.iter().enumerate() {
            let v = r * (l / norm);
            q[2 * (i + 1)] = v;
            q[2 * (i + 1) + 1] = v;
        }
    }
    Ok(ArrowheadLoss { losses: losses.to_vec(), norm, q })
}

/// `M·q₁`, `M·q₂` and the 2×2 core `QᵀMQ` for a symmetric `M`.
#[derive(Debug, Clone)]
pub struct RankTwoProjection {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub core: [[f64; 2]; 2],
}

impl ArrowheadLoss {
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// `N + 1`.
    pub fn dim(&self) -> usize {
        self.losses.len() + 1
    }

    /// `‖ℓ‖₂`, the spectral radius.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    pub fn eigvals(&self) -> [f64; 2] {
        [self.norm, -self.norm]
    }

    /// Component `i` of eigenvector `k ∈ {0, 1}`.
    #[inline]
    pub fn q(&self, i: usize, k: usize) -> f64 {
        self.q[2 * i + k]
    }

    pub fn dense(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(self.dim());
        for (i, &l) in self.losses.iter().enumerate() {
            m.set(0, i + 1, l);
        }
        m
    }

    /// `V x` in `O(N)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        let mut out = vec![0.0; x.len()];
        out[0] = math::dot(&self.losses, &x[1..]);
        for (o, &l) in out[1..].iter_mut().zip(&self.losses) {
            *o = l * x[0];
        }
        out
    }

    /// Projects a symmetric matrix onto the eigenvectors of `V`.
    ///
    /// The core is assembled from `a = M₀₀`, `b = e₀ᵀMℓ̃` and `c = ℓ̃ᵀMℓ̃`
    /// (with `ℓ̃ = (0, ℓ/‖ℓ‖)`) rather than from `qᵢᵀpⱼ`, which keeps the
    /// off-diagonal entry exact when `M` is diagonal.
    pub fn project(&self, m: &SymmetricMatrix) -> Result<RankTwoProjection> {
        check_dim(self.dim(), m.dim())?;
        let n = self.dim();
        let col0: Vec<f64> = m.row(0).to_vec();
        if self.is_zero() {
            let col1 = m.row(1).to_vec();
            let core = [[m.get(0, 0), m.get(0, 1)], [m.get(1, 0), m.get(1, 1)]];
            return Ok(RankTwoProjection { p1: col0, p2: col1, core });
        }
        let lt: Vec<f64> = core::iter::once(0.0).chain(self.losses.iter().map(|l| l / self.norm)).collect();
        let y = m.mul_vec(&lt);
        let a = col0[0];
        let b = y[0];
        let c = math::dot(&lt, &y);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let mut p1 = vec![0.0; n];
        let mut p2 = vec![0.0; n];
        for i in 0..n {
            p1[i] = r * (y[i] + col0[i]);
            p2[i] = r * (y[i] - col0[i]);
        }
        let g11 = 0.5 * (a + 2.0 * b + c);
        let g22 = 0.5 * (a - 2.0 * b + c);
        let g12 = 0.5 * (c - a);
        Ok(RankTwoProjection { p1, p2, core: [[g11, g12], [g12, g22]] })
    }

    /// Eigenvalues `(μ₊, μ₋)` of `Λ·QᵀMQ`, i.e. the nonzero spectrum of
    /// `M^{1/2} V M^{1/2}`, given the core of a PSD `M`.
    pub fn sandwich_spectrum(&self, core: &[[f64; 2]; 2]) -> (f64, f64) {
        let s = self.norm;
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let half_sum = 0.5 * (core[0][0] + core[1][1]);
        let a = (half_sum - core[0][1]).max(0.0);
        let c = (half_sum + core[0][1]).max(0.0);
        let b = 0.5 * (core[0][0] - core[1][1]);
        let root = math::sqrt(a * c);
        let plus = s * (b + root);
        let minus = if b + root > 0.0 { -s * (a * c - b * b).max(0.0) / (b + root) } else { s * (b - root) };
        (plus, minus)
    }
}

fn out_of_domain(gamma: f64, lower: f64) -> Error {
    Error::OutOfDomain { gamma, lower }
}

/// `(γI − V)⁻¹` through the rank-two structure:
/// `γ⁻¹I + s/(γ(γ−s)) q₁q₁ᵀ − s/(γ(γ+s)) q₂q₂ᵀ`.
pub fn woodbury_resolvent(gamma: f64, v: &ArrowheadLoss) -> Result<SymmetricMatrix> {
    let s = v.norm;
    if !gamma.is_finite() || gamma <= s || gamma - s <= NEAR_SINGULAR_TOL * s {
        return Err(out_of_domain(gamma, s));
    }
    let n = v.dim();
    let inv = 1.0 / gamma;
    let a = s / (gamma * (gamma - s));
    let b = -s / (gamma * (gamma + s));
    Ok(SymmetricMatrix::from_upper_fn(n, |i, j| {
        let d = if i == j { inv } else { 0.0 };
        d + a * v.q(i, 0) * v.q(j, 0) + b * v.q(i, 1) * v.q(j, 1)
    }))
}

/// `(I − γ⁻¹ S V S)⁻¹` for a symmetric PSD `S` (typically `Ω̂^{1/2}`),
/// computed as `I − P (QᵀS²Q − γΛ⁻¹)⁻¹ Pᵀ` with `P = SQ`.
pub fn woodbury_sandwich_resolvent(gamma: f64, sqrt_omega: &SymmetricMatrix, v: &ArrowheadLoss) -> Result<SymmetricMatrix> {
    check_dim(v.dim(), sqrt_omega.dim())?;
    let n = v.dim();
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(out_of_domain(gamma, 0.0));
    }
    if v.is_zero() {
        return Ok(SymmetricMatrix::identity(n));
    }
    let proj = v.project(sqrt_omega)?;
    let (p1, p2) = (&proj.p1, &proj.p2);
    // Core of S² = (SQ)ᵀ(SQ).
    let g = [[math::dot(p1, p1), math::dot(p1, p2)], [math::dot(p1, p2), math::dot(p2, p2)]];
    let (mu_plus, mu_minus) = v.sandwich_spectrum(&g);
    if gamma <= mu_plus || gamma - mu_plus <= NEAR_SINGULAR_TOL * mu_plus {
        return Err(out_of_domain(gamma, mu_plus));
    }
    let s = v.norm;
    let c11 = g[0][0] - gamma / s;
    let c22 = g[1][1] + gamma / s;
    let c12 = g[0][1];
    // det(G − γΛ⁻¹) = −(γ/s)²(1 − μ₊/γ)(1 − μ₋/γ), free of cancellation.
    let det = -(gamma / s) * (gamma / s) * (1.0 - mu_plus / gamma) * (1.0 - mu_minus / gamma);
    let (i11, i22, i12) = (c22 / det, c11 / det, -c12 / det);
    Ok(SymmetricMatrix::from_upper_fn(n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - (i11 * p1[i] * p1[j] + i12 * (p1[i] * p2[j] + p2[i] * p1[j]) + i22 * p2[i] * p2[j])
    }))
}

//! Kernels and the nominal weighting matrix `Ω̂`.
//!
//! [`gram_nominal`] builds `Ω̂` as the kernel Gram matrix over the query
//! point and its neighbors, so `Ω̂₀ᵢ = K(z₀, ẑᵢ)` and the diagonal is one.
//! [`arrowhead_nominal`] covers the case where only the weights are known.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{symmetric_eigenvalues, Cholesky, SymmetricMatrix};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `exp(−‖d‖²/h²)`
    Gaussian,
    /// `exp(−‖d‖/h)`
    Laplacian,
    /// `1 / (1 + ‖d‖²/h²)`
    Cauchy,
    /// `(1 + ‖d‖²/(2αh²))^{−α}`
    RationalQuadratic { alpha: f64 },
    /// `exp(−dᵀMd/h²)` for an SPD metric `M`.
    MahalanobisGaussian { metric: SymmetricMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(invalid(format!("bandwidth must be positive and finite, got {bandwidth}")));
        }
        match &family {
            KernelFamily::RationalQuadratic { alpha } if !(*alpha > 0.0) || !alpha.is_finite() => {
                return Err(invalid(format!("rational quadratic alpha must be positive, got {alpha}")));
            }
            KernelFamily::MahalanobisGaussian { metric } => {
                Cholesky::new(metric)?;
            }
            _ => {}
        }
        Ok(Self { family, bandwidth })
    }

    /// Gaussian kernel parameterized by the squared bandwidth `h²`.
    pub fn gaussian_h2(h2: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, math::sqrt(h2))
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

/// `K(z, z')`. All families give `K(z, z) = 1` and values in `(0, 1]`,
/// although far-apart points can underflow to zero in floating point.
pub fn eval_kernel(spec: &KernelSpec, z: &[f64], zp: &[f64]) -> Result<f64> {
    check_dim(z.len(), zp.len())?;
    let h2 = spec.bandwidth * spec.bandwidth;
    let d2 = || z.iter().zip(zp).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let k = match &spec.family {
        KernelFamily::Gaussian => math::exp(-d2() / h2),
        KernelFamily::Laplacian => math::exp(-math::sqrt(d2()) / spec.bandwidth),
        KernelFamily::Cauchy => 1.0 / (1.0 + d2() / h2),
        KernelFamily::RationalQuadratic { alpha } => math::pow(1.0 + d2() / (2.0 * alpha * h2), -alpha),
        KernelFamily::MahalanobisGaussian { metric } => {
            check_dim(metric.dim(), z.len())?;
            let diff: Vec<f64> = z.iter().zip(zp).map(|(a, b)| a - b).collect();
            math::exp(-metric.quad_form(&diff, &diff) / h2)
        }
    };
    if k.is_nan() {
        return Err(invalid("kernel evaluated to NaN (non-finite input?)"));
    }
    Ok(k)
}

/// Nominal matrix plus the data it was built from.
#[derive(Debug, Clone)]
pub struct NominalWeights {
    pub center: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub omega_hat: SymmetricMatrix,
    /// `Ω̂₀ᵢ` for `i = 1..N`.
    pub weights: Vec<f64>,
    /// Multiple of the identity added to make `Ω̂` positive definite.
    pub jitter_applied: f64,
    /// Indices (into `points`) of covariates equal to `z₀` or to an earlier point.
    pub duplicates: Vec<usize>,
    /// Leading principal minors `Δ₁ … Δ_{N+1}` (only for [`arrowhead_nominal`]).
    pub leading_minors: Vec<f64>,
}

impl NominalWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Jitter used when a Gram matrix of dimension `dim` is numerically
/// singular: `1e-10 · trace/dim`. Gram diagonals are one, so this is `1e-10`.
pub fn default_jitter(dim: usize) -> f64 {
    let trace = dim as f64;
    1e-10 * trace / dim.max(1) as f64
}

/// Gram matrix of `spec` over `(z₀, ẑ₁, …, ẑ_N)`.
///
/// Duplicated covariates make the Gram matrix singular. They are reported in
/// [`NominalWeights::duplicates`] and kept as separate rows, so `Ω̂` stays
/// aligned with the loss vector; the jitter then restores definiteness.
pub fn gram_nominal<P: AsRef<[f64]>>(spec: &KernelSpec, z0: &[f64], points: &[P], jitter: f64) -> Result<NominalWeights> {
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return Err(invalid(format!("jitter must be finite and nonnegative, got {jitter}")));
    }
    if z0.iter().any(|x| !x.is_finite()) {
        return Err(invalid("query point has non-finite coordinates"));
    }
    let all: Vec<&[f64]> = core::iter::once(z0).chain(points.iter().map(|p| p.as_ref())).collect();
    for p in &all[1..] {
        check_dim(z0.len(), p.len())?;
        if p.iter().any(|x| !x.is_finite()) {
            return Err(invalid("neighbor has non-finite coordinates"));
        }
    }
    let n = all.len();
    let mut duplicates = Vec::new();
    for i in 1..n {
        if (0..i).any(|j| all[j] == all[i]) {
            duplicates.push(i - 1);
        }
    }

    let mut gram = SymmetricMatrix::zeros(n);
    for i in 0..n {
        gram.set(i, i, eval_kernel(spec, all[i], all[i])?);
        for j in (i + 1)..n {
            gram.set(i, j, eval_kernel(spec, all[i], all[j])?);
        }
    }

    let mut jitter_applied = 0.0;
    if Cholesky::new(&gram).is_err() {
        let shifted = gram.add_diagonal(jitter);
        if jitter == 0.0 || Cholesky::new(&shifted).is_err() {
            let ev = symmetric_eigenvalues(&shifted)?;
            return Err(Error::DegenerateGram { min_eigenvalue: ev[ev.len() - 1] });
        }
        gram = shifted;
        jitter_applied = jitter;
    }

    let weights = gram.row(0)[1..].to_vec();
    Ok(NominalWeights {
        center: z0.to_vec(),
        points: all[1..].iter().map(|p| p.to_vec()).collect(),
        omega_hat: gram,
        weights,
        jitter_applied,
        duplicates,
        leading_minors: Vec::new(),
    })
}

/// Doubly nonnegative positive definite arrowhead matrix with first row
/// `(d₀, ω₁, …, ω_N)`.
///
/// With `ε₀ = max(1, max ω)`, `d₀ = slack·ε₀` and each later diagonal entry
/// is `slack` times the smallest value that keeps the next leading minor
/// positive, i.e. `d_k = slack · ω_k² / r_{k−1}` where
/// `r_k = d₀ − Σ_{j≤k} ω_j²/d_j`. A zero weight imposes no constraint and
/// gets `d_k = slack·ε₀`.
pub fn arrowhead_nominal(weights: &[f64], slack: f64) -> Result<NominalWeights> {
    if !(slack > 1.0) || !slack.is_finite() {
        return Err(invalid(format!("slack must exceed 1, got {slack}")));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(invalid(format!("weights must be finite and nonnegative, got {w}")));
    }
    let n = weights.len() + 1;
    let eps0 = weights.iter().fold(1.0_f64, |m, &w| m.max(w));
    let mut diag = vec![0.0; n];
    diag[0] = slack * eps0;
    let mut r = diag[0];
    let mut minors = Vec::with_capacity(n);
    let mut prod = 1.0;
    minors.push(r);
    for (k, &w) in weights.iter().enumerate() {
        let d = if w == 0.0 { slack * eps0 } else { slack * w * w / r };
        diag[k + 1] = d;
        r -= w * w / d;
        prod *= d;
        minors.push(prod * r);
    }
    if minors.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(invalid("arrowhead construction lost positive definiteness to overflow"));
    }
    let mut omega = SymmetricMatrix::from_diagonal(&diag);
    for (i, &w) in weights.iter().enumerate() {
        omega.set(0, i + 1, w);
    }
    Ok(NominalWeights {
        center: Vec::new(),
        points: Vec::new(),
        omega_hat: omega,
        weights: weights.to_vec(),
        jitter_applied: 0.0,
        duplicates: Vec::new(),
        leading_minors: minors,
    })
}

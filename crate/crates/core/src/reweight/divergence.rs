use crate::error::{check_dim, Error, Result};
use crate::linalg::{psd_sqrt, symmetric_eigenvalues, Cholesky, SymmetricMatrix, PSD_TOL};
use crate::math;

/// `D(Ω₁, Ω₂) = Tr(Ω₁Ω₂⁻¹) − log det(Ω₁Ω₂⁻¹) − p`.
///
/// Evaluated as `Σ (σ − 1 − ln σ)` over the eigenvalues `σ` of
/// `L⁻¹Ω₁L⁻ᵀ` with `Ω₂ = LLᵀ`, which stays accurate when `Ω₁ ≈ Ω₂`.
pub fn logdet_divergence(omega1: &SymmetricMatrix, omega2: &SymmetricMatrix) -> Result<f64> {
    check_dim(omega1.dim(), omega2.dim())?;
    Cholesky::new(omega1)?;
    let l2 = Cholesky::new(omega2)?;
    let sigma = symmetric_eigenvalues(&l2.whiten(omega1))?;
    let min = sigma[sigma.len() - 1];
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { index: sigma.len() - 1, pivot: min });
    }
    Ok(sigma.iter().map(|&s| (s - 1.0) - math::ln_1p(s - 1.0)).sum())
}

fn check_psd(m: &SymmetricMatrix) -> Result<()> {
    let ev = symmetric_eigenvalues(m)?;
    let (max, min) = (ev[0], ev[ev.len() - 1]);
    if min < -PSD_TOL * max.max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// `W(Ω₁, Ω₂) = Tr(Ω₁ + Ω₂ − 2(Ω₂^{1/2}Ω₁Ω₂^{1/2})^{1/2})`, clamped at zero.
pub fn bures_divergence(omega1: &SymmetricMatrix, omega2: &SymmetricMatrix) -> Result<f64> {
    check_dim(omega1.dim(), omega2.dim())?;
    check_psd(omega1)?;
    let root2 = psd_sqrt(omega2)?;
    let inner = symmetric_eigenvalues(&root2.sandwich(omega1))?;
    let cross: f64 = inner.iter().map(|&m| math::sqrt(m.max(0.0))).sum();
    Ok((omega1.trace() + omega2.trace() - 2.0 * cross).max(0.0))
}

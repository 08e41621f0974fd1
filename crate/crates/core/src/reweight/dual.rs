//! Univariate dual objectives.
//!
//! Both are written in terms of the 2×2 core `G = QᵀΩ̂Q`, where `Q` holds the
//! eigenvectors of `V` for `±s`. For the log-determinant case the nonzero
//! eigenvalues `μ±` of `Ω̂^{1/2}VΩ̂^{1/2}` are those of `ΛG`, so
//! `log det(I − M/γ) = log(1 − μ₊/γ) + log(1 − μ₋/γ)`.

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{ArrowheadLoss, SymmetricMatrix, NEAR_SINGULAR_TOL};
use crate::math;

/// Value and first two derivatives of a dual objective at one `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEval {
    pub value: f64,
    pub derivative: f64,
    pub curvature: f64,
}

pub(crate) trait Dual {
    /// Infimum of the domain; the objective is defined for `γ > lower()`.
    fn lower(&self) -> f64;
    fn eval(&self, gamma: f64) -> DualEval;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogDetDual {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub rho: f64,
}

impl LogDetDual {
    pub fn new(v: &ArrowheadLoss, core: &[[f64; 2]; 2], rho: f64) -> Self {
        let (mu_plus, mu_minus) = v.sandwich_spectrum(core);
        Self { mu_plus, mu_minus, rho }
    }
}

impl Dual for LogDetDual {
    fn lower(&self) -> f64 {
        self.mu_plus
    }

    fn eval(&self, gamma: f64) -> DualEval {
        let mut logs = 0.0;
        let mut ratios = 0.0;
        let mut curv = 0.0;
        for mu in [self.mu_plus, self.mu_minus] {
            let gap = gamma - mu;
            logs += math::ln_1p(-mu / gamma);
            ratios += mu / gap;
            curv += mu * mu / (gamma * gap * gap);
        }
        DualEval { value: gamma * self.rho - gamma * logs, derivative: self.rho - logs - ratios, curvature: curv }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BuresDual {
    pub s: f64,
    pub g11: f64,
    pub g22: f64,
    pub rho: f64,
}

impl BuresDual {
    pub fn new(v: &ArrowheadLoss, core: &[[f64; 2]; 2], rho: f64) -> Self {
        Self { s: v.norm(), g11: core[0][0].max(0.0), g22: core[1][1].max(0.0), rho }
    }
}

impl Dual for BuresDual {
    fn lower(&self) -> f64 {
        self.s
    }

    fn eval(&self, gamma: f64) -> DualEval {
        let s = self.s;
        let (up, dn) = (gamma - s, gamma + s);
        let value = gamma * self.rho + self.g11 * gamma * s / up - self.g22 * gamma * s / dn;
        let derivative = self.rho - s * s * (self.g11 / (up * up) + self.g22 / (dn * dn));
        let curvature = 2.0 * s * s * (self.g11 / (up * up * up) + self.g22 / (dn * dn * dn));
        DualEval { value, derivative, curvature }
    }
}

fn check_gamma(gamma: f64, lower: f64) -> Result<()> {
    if !gamma.is_finite() || gamma <= lower || gamma - lower <= NEAR_SINGULAR_TOL * lower {
        return Err(Error::OutOfDomain { gamma, lower });
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(invalid(alloc::format!("rho must be finite and nonnegative, got {rho}")));
    }
    Ok(())
}

fn flat(gamma: f64, rho: f64) -> Result<DualEval> {
    check_gamma(gamma, 0.0)?;
    Ok(DualEval { value: gamma * rho, derivative: rho, curvature: 0.0 })
}

/// `g(γ) = γρ − γ log det(I − γ⁻¹ Ω̂^{1/2} V Ω̂^{1/2})` and its derivatives,
/// from the square root `Ω̂^{1/2}`.
pub fn dual_objective_logdet(gamma: f64, sqrt_omega: &SymmetricMatrix, v: &ArrowheadLoss, rho: f64) -> Result<DualEval> {
    check_dim(v.dim(), sqrt_omega.dim())?;
    check_rho(rho)?;
    if v.is_zero() {
        return flat(gamma, rho);
    }
    let p = v.project(sqrt_omega)?;
    let core = [
        [math::dot(&p.p1, &p.p1), math::dot(&p.p1, &p.p2)],
        [math::dot(&p.p1, &p.p2), math::dot(&p.p2, &p.p2)],
    ];
    let dual = LogDetDual::new(v, &core, rho);
    check_gamma(gamma, dual.lower())?;
    Ok(dual.eval(gamma))
}

/// `h(γ) = γ(ρ − Tr Ω̂) + γ²⟨(γI − V)⁻¹, Ω̂⟩` and its derivatives.
pub fn dual_objective_bures(gamma: f64, omega_hat: &SymmetricMatrix, v: &ArrowheadLoss, rho: f64) -> Result<DualEval> {
    check_dim(v.dim(), omega_hat.dim())?;
    check_rho(rho)?;
    if v.is_zero() {
        return flat(gamma, rho);
    }
    let p = v.project(omega_hat)?;
    let dual = BuresDual::new(v, &p.core, rho);
    check_gamma(gamma, dual.lower())?;
    Ok(dual.eval(gamma))
}

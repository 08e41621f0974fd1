use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::dual::{BuresDual, Dual, DualEval, LogDetDual};
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{symmetric_eigenvalues, ArrowheadLoss, Cholesky, SymmetricMatrix, PSD_TOL};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Divergence {
    LogDet,
    BuresWasserstein,
}

impl Divergence {
    pub fn name(self) -> &'static str {
        match self {
            Divergence::LogDet => "logdet",
            Divergence::BuresWasserstein => "bures",
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Divergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logdet" | "log-det" | "kl" => Ok(Divergence::LogDet),
            "bures" | "buresw" | "bures-wasserstein" | "wasserstein" => Ok(Divergence::BuresWasserstein),
            other => Err(invalid(format!("unknown divergence `{other}` (expected logdet or bures)"))),
        }
    }
}

/// Divergence ball `{Ω ≥ 0, Ω ⪰ 0, φ(Ω, Ω̂) ≤ ρ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintySpec {
    pub divergence: Divergence,
    pub rho: f64,
}

impl UncertaintySpec {
    pub fn new(divergence: Divergence, rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(invalid(format!("rho must be finite and nonnegative, got {rho}")));
        }
        Ok(Self { divergence, rho })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Newton/bisection iterations allowed once `γ` is bracketed.
    pub max_iters: usize,
    /// Verify tightness, nominal feasibility and double nonnegativity of the
    /// returned solution. The spectral part costs one `O(N³)` eigensolve.
    pub check_invariants: bool,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { max_iters: 200, check_invariants: true }
    }
}

#[derive(Debug, Clone)]
pub struct WorstCaseSolution {
    /// Worst-case loss `max ⟨Ω, V⟩` over the ball.
    pub value: f64,
    /// Optimal dual variable; `+∞` when `ρ = 0` or `V = 0`.
    pub gamma_star: f64,
    pub omega_star: SymmetricMatrix,
    /// `Ω*₀ᵢ` for `i = 1..N`.
    pub first_row_weights: Vec<f64>,
    pub iterations: usize,
    /// `|φ'(γ*)|` at termination.
    pub residual: f64,
}

impl WorstCaseSolution {
    fn nominal(omega_hat: &SymmetricMatrix, v: &ArrowheadLoss) -> Self {
        let first_row_weights = omega_hat.row(0)[1..].to_vec();
        let value = 2.0 * math::dot(&first_row_weights, v.losses());
        Self {
            value,
            gamma_star: f64::INFINITY,
            omega_star: omega_hat.clone(),
            first_row_weights,
            iterations: 0,
            residual: 0.0,
        }
    }
}

pub fn worst_case(omega_hat: &SymmetricMatrix, v: &ArrowheadLoss, spec: &UncertaintySpec) -> Result<WorstCaseSolution> {
    worst_case_with(omega_hat, v, spec, &InnerConfig::default())
}

/// Solves the inner maximization through its one-dimensional dual.
pub fn worst_case_with(
    omega_hat: &SymmetricMatrix,
    v: &ArrowheadLoss,
    spec: &UncertaintySpec,
    cfg: &InnerConfig,
) -> Result<WorstCaseSolution> {
    check_dim(v.dim(), omega_hat.dim())?;
    let spec = UncertaintySpec::new(spec.divergence, spec.rho)?;
    validate_nominal(omega_hat, spec.divergence)?;

    if spec.rho == 0.0 || v.is_zero() {
        return Ok(WorstCaseSolution::nominal(omega_hat, v));
    }

    let proj = v.project(omega_hat)?;
    let (gamma, eval, iterations, omega_star) = match spec.divergence {
        Divergence::LogDet => {
            let dual = LogDetDual::new(v, &proj.core, spec.rho);
            let (gamma, eval, iterations) = solve_dual(&dual, spec.rho, cfg.max_iters)?;
            let omega = logdet_optimum(omega_hat, v, &proj.p1, &proj.p2, &proj.core, &dual, gamma);
            (gamma, eval, iterations, omega)
        }
        Divergence::BuresWasserstein => {
            let dual = BuresDual::new(v, &proj.core, spec.rho);
            let (gamma, eval, iterations) = solve_dual(&dual, spec.rho, cfg.max_iters)?;
            let omega = bures_optimum(omega_hat, v, &proj.p1, &proj.p2, &proj.core, gamma);
            (gamma, eval, iterations, omega)
        }
    };

    let first_row_weights = omega_star.row(0)[1..].to_vec();
    let sol = WorstCaseSolution {
        value: eval.value,
        gamma_star: gamma,
        omega_star,
        first_row_weights,
        iterations,
        residual: math::abs(eval.derivative),
    };
    if cfg.check_invariants {
        check_solution(&sol, omega_hat, v)?;
    }
    Ok(sol)
}

fn validate_nominal(omega_hat: &SymmetricMatrix, divergence: Divergence) -> Result<()> {
    if !omega_hat.is_finite() {
        return Err(invalid("nominal matrix has non-finite entries"));
    }
    let min = omega_hat.min_entry();
    if min < 0.0 {
        return Err(invalid(format!("nominal matrix must be entrywise nonnegative (min entry {min:e})")));
    }
    match divergence {
        // The log-determinant divergence is only defined between PD matrices.
        Divergence::LogDet => Cholesky::new(omega_hat).map(|_| ()),
        Divergence::BuresWasserstein => {
            if Cholesky::new(omega_hat).is_ok() {
                return Ok(());
            }
            let ev = symmetric_eigenvalues(omega_hat)?;
            let (max, min) = (ev[0], ev[ev.len() - 1]);
            if min < -PSD_TOL * max.max(1.0) {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
            Ok(())
        }
    }
}

/// Safeguarded Newton on the derivative of a convex dual over `(lower, ∞)`.
fn solve_dual(dual: &impl Dual, rho: f64, max_iters: usize) -> Result<(f64, DualEval, usize)> {
    let lower = dual.lower();
    let dtol = 1e-10 * rho.max(1.0);
    let mut lo = lower;
    let mut hi = if lower > 0.0 { 2.0 * lower } else { 1.0 };
    let mut e = dual.eval(hi);
    let mut doublings = 0;
    // The derivative tends to ρ > 0 as γ → ∞, so doubling terminates.
    while e.derivative < 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if !hi.is_finite() || doublings > 1100 {
            return Err(Error::ConvergenceFailure { iterations: doublings, residual: math::abs(e.derivative) });
        }
        e = dual.eval(hi);
    }

    let mut x = hi;
    for it in 0..max_iters {
        let d = e.derivative;
        if !d.is_finite() {
            return Err(Error::ConvergenceFailure { iterations: it, residual: f64::NAN });
        }
        // The duality gap at γ is γ·φ'(γ); require it small as well.
        if math::abs(d) <= dtol && x * math::abs(d) <= 1e-10 * (1.0 + math::abs(e.value)) {
            return Ok((x, e, it + doublings));
        }
        if d < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 1e-12 * x {
            return Ok((x, e, it + doublings));
        }
        let mut next = x - d / e.curvature;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        x = next;
        e = dual.eval(x);
    }
    Err(Error::ConvergenceFailure { iterations: max_iters + doublings, residual: math::abs(e.derivative) })
}

// Ω* = Ω̂^{1/2}(I − γ⁻¹Ω̂^{1/2}VΩ̂^{1/2})⁻¹Ω̂^{1/2} = Ω̂ − P(G − γΛ⁻¹)⁻¹Pᵀ
// with P = Ω̂Q; no square root is needed.
fn logdet_optimum(
    omega_hat: &SymmetricMatrix,
    v: &ArrowheadLoss,
    p1: &[f64],
    p2: &[f64],
    g: &[[f64; 2]; 2],
    dual: &LogDetDual,
    gamma: f64,
) -> SymmetricMatrix {
    let s = v.norm();
    let c11 = g[0][0] - gamma / s;
    let c22 = g[1][1] + gamma / s;
    let c12 = g[0][1];
    let det = -(gamma / s) * (gamma / s) * (1.0 - dual.mu_plus / gamma) * (1.0 - dual.mu_minus / gamma);
    let (i11, i22, i12) = (c22 / det, c11 / det, -c12 / det);
    let n = omega_hat.dim();
    SymmetricMatrix::from_upper_fn(n, |i, j| {
        omega_hat.get(i, j) - (i11 * p1[i] * p1[j] + i12 * (p1[i] * p2[j] + p2[i] * p1[j]) + i22 * p2[i] * p2[j])
    })
}

// Ω* = γ²(γI − V)⁻¹Ω̂(γI − V)⁻¹ with γ(γI − V)⁻¹ = I + QDQᵀ,
// D = diag(s/(γ−s), −s/(γ+s)).
fn bures_optimum(
    omega_hat: &SymmetricMatrix,
    v: &ArrowheadLoss,
    p1: &[f64],
    p2: &[f64],
    g: &[[f64; 2]; 2],
    gamma: f64,
) -> SymmetricMatrix {
    let s = v.norm();
    let d1 = s / (gamma - s);
    let d2 = -s / (gamma + s);
    let (m11, m12, m22) = (d1 * d1 * g[0][0], d1 * d2 * g[0][1], d2 * d2 * g[1][1]);
    let n = omega_hat.dim();
    SymmetricMatrix::from_upper_fn(n, |i, j| {
        let (qi1, qi2, qj1, qj2) = (v.q(i, 0), v.q(i, 1), v.q(j, 0), v.q(j, 1));
        omega_hat.get(i, j)
            + d1 * (qi1 * p1[j] + p1[i] * qj1)
            + d2 * (qi2 * p2[j] + p2[i] * qj2)
            + m11 * qi1 * qj1
            + m12 * (qi1 * qj2 + qi2 * qj1)
            + m22 * qi2 * qj2
    })
}

fn check_solution(sol: &WorstCaseSolution, omega_hat: &SymmetricMatrix, v: &ArrowheadLoss) -> Result<()> {
    let fail = |msg: String| Err(Error::InternalConsistency(msg));
    let primal = 2.0 * math::dot(&sol.first_row_weights, v.losses());
    if math::abs(sol.value - primal) > 1e-8 * (1.0 + math::abs(sol.value)) {
        return fail(format!("dual value {} and primal value {} disagree", sol.value, primal));
    }
    let nominal = 2.0 * math::dot(&omega_hat.row(0)[1..], v.losses());
    if sol.value < nominal - 1e-8 * (1.0 + math::abs(nominal)) {
        return fail(format!("worst-case value {} below nominal value {}", sol.value, nominal));
    }
    let ev = symmetric_eigenvalues(&sol.omega_star)?;
    let (max, min) = (ev[0], ev[ev.len() - 1]);
    let tol = 1e-8 * max.max(0.0);
    if min < -tol || sol.omega_star.min_entry() < -tol {
        return fail(format!(
            "optimal weighting matrix is not doubly nonnegative (min entry {:e}, min eigenvalue {:e})",
            sol.omega_star.min_entry(),
            min
        ));
    }
    Ok(())
}

/// Danskin gradient `2 Σᵢ Ω*₀ᵢ ∇_β ℓᵢ`.
pub fn robust_gradient(sol: &WorstCaseSolution, loss_gradients: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_dim(sol.first_row_weights.len(), loss_gradients.len())?;
    let dim = loss_gradients.first().map_or(0, |g| g.len());
    let mut out = vec![0.0; dim];
    for (w, g) in sol.first_row_weights.iter().zip(loss_gradients) {
        check_dim(dim, g.len())?;
        for (o, gi) in out.iter_mut().zip(g) {
            *o += 2.0 * w * gi;
        }
    }
    Ok(out)
}

//! Outer minimization of `β ↦ F(β) = max_{Ω ∈ U} ⟨Ω, V(β)⟩`.
//!
//! `F` is convex whenever the losses are, and by Danskin's theorem its
//! gradient is `2 Σᵢ Ω*₀ᵢ ∇ℓᵢ(β)`. The solver is plain gradient descent with
//! Barzilai-Borwein trial steps and Armijo backtracking, started at the
//! nominal (`ρ = 0`) estimate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::estimators::{llr_estimate, nw_estimate, LocalSample};
use crate::kernel::NominalWeights;
use crate::linalg::{arrowhead_eigen, SymmetricMatrix};
use crate::math;
use crate::reweight::{robust_gradient, worst_case_with, InnerConfig, UncertaintySpec, WorstCaseSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed { step: f64 },
    Backtracking { shrink: f64, sufficient_decrease: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Nominal,
    User(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    pub max_iters: usize,
    /// Stop once `‖∇F‖ ≤ grad_tol · (1 + |F|)`.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    pub init: Init,
    pub inner: InnerConfig,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            step_rule: StepRule::Backtracking { shrink: 0.5, sufficient_decrease: 1e-4 },
            init: Init::Nominal,
            inner: InnerConfig::default(),
        }
    }
}

impl OuterConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.grad_tol > 0.0) {
            return Err(invalid("outer solver needs max_iters > 0 and grad_tol > 0"));
        }
        match self.step_rule {
            StepRule::Fixed { step } if !(step > 0.0) => Err(invalid("fixed step must be positive")),
            StepRule::Backtracking { shrink, sufficient_decrease }
                if !(shrink > 0.0 && shrink < 1.0) || !(sufficient_decrease > 0.0 && sufficient_decrease < 0.5) =>
            {
                Err(invalid("backtracking needs shrink in (0,1) and sufficient decrease in (0,1/2)"))
            }
            _ => Ok(()),
        }
    }
}

/// A family of nonnegative losses, convex and differentiable in `β`.
pub trait LossFamily {
    /// Length of `β`.
    fn param_dim(&self) -> usize;
    /// Number of samples `N`.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn losses(&self, beta: &[f64]) -> Vec<f64>;
    fn gradients(&self, beta: &[f64]) -> Vec<Vec<f64>>;
    /// Minimizer of the nominal objective `Σ ωᵢ ℓᵢ(β)`.
    fn nominal_init(&self, weights: &[f64]) -> Result<Vec<f64>>;
    /// Rough curvature scale of `Σ ωᵢ ℓᵢ`, used for the first trial step.
    fn lipschitz_hint(&self, weights: &[f64]) -> f64;
}

/// `ℓᵢ(β) = (β − ŷᵢ)²`.
#[derive(Debug, Clone)]
pub struct SquaredLoss {
    pub responses: Vec<f64>,
}

impl LossFamily for SquaredLoss {
    fn param_dim(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        self.responses.len()
    }

    fn losses(&self, beta: &[f64]) -> Vec<f64> {
        self.responses.iter().map(|y| (beta[0] - y) * (beta[0] - y)).collect()
    }

    fn gradients(&self, beta: &[f64]) -> Vec<Vec<f64>> {
        self.responses.iter().map(|y| vec![2.0 * (beta[0] - y)]).collect()
    }

    fn nominal_init(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateWeights);
        }
        Ok(vec![math::dot(weights, &self.responses) / total])
    }

    fn lipschitz_hint(&self, weights: &[f64]) -> f64 {
        4.0 * weights.iter().sum::<f64>()
    }
}

/// `ℓᵢ(β) = (β₁ + β₂ᵀ(ẑᵢ − z₀) − ŷᵢ)²`, so `β₁` is the prediction at `z₀`.
#[derive(Debug, Clone)]
pub struct LocalLinearLoss {
    pub center: Vec<f64>,
    pub covariates: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
}

impl LocalLinearLoss {
    fn residual(&self, beta: &[f64], i: usize) -> f64 {
        let z = &self.covariates[i];
        let lin: f64 = beta[1..].iter().zip(z.iter().zip(&self.center)).map(|(b, (a, c))| b * (a - c)).sum();
        beta[0] + lin - self.responses[i]
    }
}

impl LossFamily for LocalLinearLoss {
    fn param_dim(&self) -> usize {
        self.center.len() + 1
    }

    fn len(&self) -> usize {
        self.responses.len()
    }

    fn losses(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let r = self.residual(beta, i);
                r * r
            })
            .collect()
    }

    fn gradients(&self, beta: &[f64]) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let r2 = 2.0 * self.residual(beta, i);
                core::iter::once(r2)
                    .chain(self.covariates[i].iter().zip(&self.center).map(|(a, c)| r2 * (a - c)))
                    .collect()
            })
            .collect()
    }

    fn nominal_init(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let sample = LocalSample::new(
            self.center.clone(),
            self.covariates.clone(),
            self.responses.clone(),
            weights.to_vec(),
        )?;
        let fit = llr_estimate(&sample)?;
        let mut beta = vec![fit.intercept];
        beta.extend(fit.slope);
        Ok(beta)
    }

    fn lipschitz_hint(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .zip(&self.covariates)
            .map(|(w, z)| {
                let d2: f64 = z.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
                4.0 * w * (1.0 + d2)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub beta: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Step length that produced this iterate (0 for the starting point).
    pub step: f64,
    pub gamma_star: f64,
}

#[derive(Debug, Clone)]
pub struct RobustFit {
    pub beta: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub solution: WorstCaseSolution,
    pub trace: Vec<IterationRecord>,
}

struct Point {
    beta: Vec<f64>,
    sol: WorstCaseSolution,
    grad: Vec<f64>,
}

fn evaluate(loss: &impl LossFamily, omega_hat: &SymmetricMatrix, spec: &UncertaintySpec, inner: &InnerConfig, beta: Vec<f64>) -> Result<Point> {
    let v = arrowhead_eigen(&loss.losses(&beta))?;
    let sol = worst_case_with(omega_hat, &v, spec, inner)?;
    let grad = robust_gradient(&sol, &loss.gradients(&beta))?;
    Ok(Point { beta, sol, grad })
}

/// Minimizes the worst-case loss of `loss` over `β`.
///
/// If the iteration budget runs out or the line search stalls, the best
/// iterate is returned with `converged = false`.
pub fn robust_estimate_generic(
    loss: &impl LossFamily,
    nominal: &NominalWeights,
    spec: &UncertaintySpec,
    cfg: &OuterConfig,
) -> Result<RobustFit> {
    cfg.validate()?;
    let omega_hat = &nominal.omega_hat;
    check_dim(loss.len() + 1, omega_hat.dim())?;
    let weights = &omega_hat.row(0)[1..];
    let beta0 = match &cfg.init {
        Init::Nominal => loss.nominal_init(weights)?,
        Init::User(b) => {
            check_dim(loss.param_dim(), b.len())?;
            b.clone()
        }
    };
    if beta0.iter().any(|b| !b.is_finite()) {
        return Err(invalid(format!("non-finite starting point {beta0:?}")));
    }

    let mut cur = evaluate(loss, omega_hat, spec, &cfg.inner, beta0)?;
    let mut trace = Vec::new();
    let mut step = 1.0 / loss.lipschitz_hint(weights).max(f64::MIN_POSITIVE);
    let mut last_step = 0.0;
    let mut converged = false;

    for it in 0..cfg.max_iters {
        let gnorm = math::norm2(&cur.grad);
        trace.push(IterationRecord {
            iteration: it,
            beta: cur.beta.clone(),
            value: cur.sol.value,
            grad_norm: gnorm,
            step: last_step,
            gamma_star: cur.sol.gamma_star,
        });
        // V(β) = 0 is a global minimizer with F = 0.
        if cur.sol.value == 0.0 || gnorm <= cfg.grad_tol * (1.0 + math::abs(cur.sol.value)) {
            converged = true;
            break;
        }
        let next = match cfg.step_rule {
            StepRule::Fixed { step } => {
                let beta: Vec<f64> = cur.beta.iter().zip(&cur.grad).map(|(b, g)| b - step * g).collect();
                Some((evaluate(loss, omega_hat, spec, &cfg.inner, beta)?, step))
            }
            StepRule::Backtracking { shrink, sufficient_decrease } => {
                line_search(loss, omega_hat, spec, &cfg.inner, &cur, step, shrink, sufficient_decrease)?
            }
        };
        let Some((new, t)) = next else { break };

        // Barzilai-Borwein trial step for the next iteration.
        let s: Vec<f64> = new.beta.iter().zip(&cur.beta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = math::dot(&s, &y);
        step = if sy > 0.0 { math::dot(&s, &s) / sy } else { 2.0 * t };
        last_step = t;
        cur = new;
    }

    if !converged {
        let gnorm = math::norm2(&cur.grad);
        if trace.last().map(|r| r.beta != cur.beta).unwrap_or(true) {
            trace.push(IterationRecord {
                iteration: trace.len(),
                beta: cur.beta.clone(),
                value: cur.sol.value,
                grad_norm: gnorm,
                step: last_step,
                gamma_star: cur.sol.gamma_star,
            });
        }
        converged = gnorm <= cfg.grad_tol * (1.0 + math::abs(cur.sol.value));
    }
    Ok(RobustFit { value: cur.sol.value, beta: cur.beta, converged, solution: cur.sol, trace })
}

/// Armijo backtracking along `−∇F`. Close to the optimum the decrease in `F`
/// can drop below its rounding error, so a step is also accepted under the
/// approximate Wolfe conditions (Hager and Zhang): `F` rises by at most
/// `1e-12·|F|` and the directional derivative has shrunk appropriately.
#[allow(clippy::too_many_arguments)]
fn line_search(
    loss: &impl LossFamily,
    omega_hat: &SymmetricMatrix,
    spec: &UncertaintySpec,
    inner: &InnerConfig,
    cur: &Point,
    mut t: f64,
    shrink: f64,
    c: f64,
) -> Result<Option<(Point, f64)>> {
    let slope0 = -math::dot(&cur.grad, &cur.grad);
    let f0 = cur.sol.value;
    for _ in 0..80 {
        let beta: Vec<f64> = cur.beta.iter().zip(&cur.grad).map(|(b, g)| b - t * g).collect();
        let cand = match evaluate(loss, omega_hat, spec, inner, beta) {
            Ok(p) => p,
            Err(Error::ConvergenceFailure { .. }) => {
                t *= shrink;
                continue;
            }
            Err(e) => return Err(e),
        };
        let f = cand.sol.value;
        if f <= f0 + c * t * slope0 {
            return Ok(Some((cand, t)));
        }
        let slope = -math::dot(&cand.grad, &cur.grad);
        let approx_wolfe = f <= f0 + 1e-12 * math::abs(f0) && slope >= 0.9 * slope0 && slope <= -0.8 * slope0;
        if approx_wolfe {
            return Ok(Some((cand, t)));
        }
        t *= shrink;
    }
    Ok(None)
}

/// Robust Nadaraya-Watson estimate: squared loss on the responses.
pub fn robust_nw(sample: &LocalSample, nominal: &NominalWeights, spec: &UncertaintySpec, cfg: &OuterConfig) -> Result<RobustFit> {
    check_dim(sample.len(), nominal.len())?;
    if matches!(cfg.init, Init::Nominal) {
        // Fails early with a clear error if all weights vanish.
        nw_estimate(&LocalSample { weights: nominal.weights.clone(), ..sample.clone() })?;
    }
    robust_estimate_generic(&SquaredLoss { responses: sample.responses.clone() }, nominal, spec, cfg)
}

/// Robust locally linear regression; the prediction is `beta[0]`.
pub fn robust_llr(sample: &LocalSample, nominal: &NominalWeights, spec: &UncertaintySpec, cfg: &OuterConfig) -> Result<RobustFit> {
    check_dim(sample.len(), nominal.len())?;
    let loss = LocalLinearLoss {
        center: sample.center.clone(),
        covariates: sample.covariates.clone(),
        responses: sample.responses.clone(),
    };
    robust_estimate_generic(&loss, nominal, spec, cfg)
}

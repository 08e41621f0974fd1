//! Closed-form local estimators: Nadaraya-Watson and locally linear regression.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{symmetric_eigenvalues, Cholesky, SymmetricMatrix};

/// Neighbors of a query point together with their kernel weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSample {
    pub center: Vec<f64>,
    pub covariates: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LocalSample {
    pub fn new(center: Vec<f64>, covariates: Vec<Vec<f64>>, responses: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = responses.len();
        check_dim(n, covariates.len())?;
        check_dim(n, weights.len())?;
        for z in &covariates {
            check_dim(center.len(), z.len())?;
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(invalid(format!("weights must be finite and nonnegative, got {w}")));
        }
        if responses.iter().any(|y| !y.is_finite()) {
            return Err(invalid("responses must be finite"));
        }
        Ok(Self { center, covariates, responses, weights })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

/// `Σ ωᵢ ŷᵢ / Σ ωᵢ`.
pub fn nw_estimate(s: &LocalSample) -> Result<f64> {
    let total: f64 = s.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let num: f64 = s.weights.iter().zip(&s.responses).map(|(w, y)| w * y).sum();
    Ok(num / total)
}

/// `((β − ŷᵢ)²)ᵢ`.
pub fn squared_losses(beta: f64, responses: &[f64]) -> Vec<f64> {
    responses.iter().map(|y| (beta - y) * (beta - y)).collect()
}

/// Weighted least-squares fit of `β₁ + β₂ᵀ(z − z₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFit {
    pub intercept: f64,
    pub slope: Vec<f64>,
    /// Prediction at `z₀`; equal to the intercept on the centered design.
    pub prediction: f64,
    /// Ridge added to the normal matrix when it was numerically singular.
    pub ridge: Option<f64>,
}

/// Locally linear regression on the `z₀`-centered design.
///
/// If `λ_min(ZᵀWZ) ≤ 1e-12·tr(ZᵀWZ)` a ridge of `1e-8·tr/(d+1)` is added
/// and reported in [`LlrFit::ridge`].
pub fn llr_estimate(s: &LocalSample) -> Result<LlrFit> {
    if s.is_empty() {
        return Err(Error::DegenerateWeights);
    }
    let p = s.center.len() + 1;
    let mut normal = SymmetricMatrix::zeros(p);
    let mut rhs = vec![0.0; p];
    let mut row = vec![0.0; p];
    for ((z, &y), &w) in s.covariates.iter().zip(&s.responses).zip(&s.weights) {
        row[0] = 1.0;
        for (r, (a, b)) in row[1..].iter_mut().zip(z.iter().zip(&s.center)) {
            *r = a - b;
        }
        for i in 0..p {
            rhs[i] += w * row[i] * y;
            for j in i..p {
                normal.set(i, j, normal.get(i, j) + w * row[i] * row[j]);
            }
        }
    }
    let trace = normal.trace();
    if !(trace > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let ev = symmetric_eigenvalues(&normal)?;
    let min = ev[p - 1];
    let mut ridge = None;
    if min <= 1e-12 * trace {
        let r = 1e-8 * trace / p as f64;
        normal = normal.add_diagonal(r);
        ridge = Some(r);
    }
    let chol = Cholesky::new(&normal).map_err(|_| Error::RankDeficient { min_eigenvalue: min })?;
    chol.solve(&mut rhs);
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(Error::RankDeficient { min_eigenvalue: min });
    }
    let intercept = rhs[0];
    Ok(LlrFit { intercept, slope: rhs[1..].to_vec(), prediction: intercept, ridge })
}

/// The intercept of [`llr_estimate`].
pub fn llr_intercept(s: &LocalSample) -> Result<f64> {
    llr_estimate(s).map(|f| f.intercept)
}

//! Dense symmetric linear algebra tuned to the structures that appear in the
//! reweighting problem: arrowhead loss matrices, PSD square roots,
//! log-determinants and rank-two Woodbury resolvents.

mod arrowhead;
mod cholesky;
mod eigen;
mod symmetric;

pub use arrowhead::{arrowhead_eigen, woodbury_resolvent, woodbury_sandwich_resolvent, ArrowheadLoss, RankTwoProjection};
pub use cholesky::{logdet, Cholesky};
pub use eigen::{is_doubly_nonnegative, psd_sqrt, symmetric_eigenvalues, DnnReport, SpectralFactorization};
pub use symmetric::SymmetricMatrix;

/// Relative tolerance used to decide whether a matrix is PSD:
/// `λ_min ≥ −PSD_TOL · max(1, λ_max)`.
pub const PSD_TOL: f64 = 1e-10;

/// Resolvents closer than this (relative) to their singular point are refused.
pub const NEAR_SINGULAR_TOL: f64 = 1e-9;

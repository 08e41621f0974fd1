//! Adversarially reweighted kernel regression.
//!
//! Kernel smoothers such as Nadaraya-Watson weight each training sample by
//! `ω(ẑᵢ) = K(z₀, ẑᵢ)`. This crate lifts those weights into an
//! `(N+1)×(N+1)` doubly nonnegative matrix `Ω̂` (the kernel Gram matrix over
//! the query point and its neighbors) and the per-sample losses into the
//! arrowhead matrix `V(β)`, so that the weighted risk is `⟨Ω̂, V(β)⟩`. The
//! robust estimate minimizes the worst case of `⟨Ω, V(β)⟩` over all doubly
//! nonnegative `Ω` within a divergence ball around `Ω̂`:
//!
//! * [`reweight::Divergence::LogDet`]: `Tr(Ω₁Ω₂⁻¹) − log det(Ω₁Ω₂⁻¹) − p`
//! * [`reweight::Divergence::BuresWasserstein`]:
//!   `Tr(Ω₁ + Ω₂ − 2(Ω₂^{1/2}Ω₁Ω₂^{1/2})^{1/2})`
//!
//! For both divergences the inner maximization collapses to a convex problem
//! in a single dual variable `γ`; because `V(β)` has rank two, every
//! evaluation costs `O(N²)` ([`reweight::worst_case`]). The outer
//! minimization over `β` uses the Danskin gradient
//! `2 Σ Ω*₀ᵢ ∇ℓᵢ` ([`solver`]).
//!
//! The crate is `no_std` and only needs `alloc`. Dataset handling, the
//! benchmark harness and the command-line tool live in the `reweight` crate.
//!
//! ```
//! use reweight_core::kernel::{gram_nominal, KernelSpec, KernelFamily, default_jitter};
//! use reweight_core::linalg::arrowhead_eigen;
//! use reweight_core::reweight::{worst_case, UncertaintySpec, Divergence};
//!
//! let kernel = KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap();
//! let points = vec![vec![0.5], vec![-1.0]];
//! let nominal = gram_nominal(&kernel, &[0.0], &points, default_jitter(3)).unwrap();
//! let v = arrowhead_eigen(&[1.0, 2.0]).unwrap();
//! let spec = UncertaintySpec::new(Divergence::LogDet, 0.1).unwrap();
//! let sol = worst_case(&nominal.omega_hat, &v, &spec).unwrap();
//! assert!(sol.value >= nominal.omega_hat.inner(&v.dense()));
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod estimators;
pub mod kernel;
pub mod linalg;
pub(crate) mod math;
pub mod reweight;
pub mod solver;

pub use error::{Error, Result};

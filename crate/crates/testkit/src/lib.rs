//! Test-only oracles built on nalgebra, independent of `reweight-core`.
//!
//! Matrices are exchanged as `(dim, row-major &[f64])` so this crate never
//! depends on the types under test.

pub mod dense;
pub mod gen;
pub mod numeric;
pub mod primal;

pub use dense::Mat;

//! Worst-case reweighting: the divergences, their univariate duals, the
//! optimal weighting matrix `Ω*` and the Danskin gradient.

mod divergence;
mod dual;
mod worst_case;

pub use divergence::{bures_divergence, logdet_divergence};
pub use dual::{dual_objective_bures, dual_objective_logdet, DualEval};
pub use worst_case::{
    robust_gradient, worst_case, worst_case_with, Divergence, InnerConfig, UncertaintySpec, WorstCaseSolution,
};

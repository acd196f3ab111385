//! Test statistics built from adjusted criterion functions, plus confidence
//! intervals by test inversion.

pub mod ci;
pub mod eval;
pub mod stats;

pub use ci::{invert_to_interval, t_interval, CiMethod, ConfidenceInterval};
pub use eval::{CriterionEvaluation, EstimatePair, EstimateProvenance, Restriction, TestOutcome};
pub use stats::{
    adjusted_restricted, adjusted_unrestricted, c_alpha, classic_lm, classic_lr, lrc_alpha,
    lrc_alpha_subvector, projection_matrix, wald,
};

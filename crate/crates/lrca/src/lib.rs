//! Boundary- and misspecification-robust likelihood-ratio C(alpha) tests.
//!
//! The crate provides:
//! * test statistics built from adjusted criterion functions (LRC-alpha,
//!   score-type C-alpha, LR, LM, Wald) and confidence intervals by test
//!   inversion ([`inference`]);
//! * three criterion-function families: Gaussian ARCH quasi-likelihood,
//!   Weibull survival regression and the balanced two-way error components
//!   model ([`models`]);
//! * a box-constrained quasi-Newton maximizer ([`optimize`]);
//! * a seeded, parallel Monte Carlo harness for size and power studies
//!   ([`montecarlo`]);
//! * the `lrca` command-line front end ([`cli`]).

pub mod cli;
pub mod error;
pub mod inference;
pub mod models;
pub mod montecarlo;
pub mod numeric;
pub mod optimize;

pub use error::{Error, Result};

//! Dense small-matrix linear algebra, chi-square distribution functions and
//! finite-difference differentiation.

pub mod chi2;
pub mod fd;
pub mod matrix;

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf, std_normal_quantile};
pub use fd::{default_step, fd_gradient, fd_hessian};
pub use matrix::{spd_solve_mat, spd_solve_vec, Cholesky, Matrix, SymMatrix, Vector};

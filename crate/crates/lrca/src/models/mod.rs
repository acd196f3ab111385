//! The three criterion-function families: Gaussian ARCH quasi-likelihood,
//! Weibull survival regression and the balanced two-way error components
//! model, plus strict CSV readers for their data formats.

pub mod arch;
pub mod csv;
pub mod error_components;
pub mod weibull;

use crate::numeric::{Matrix, SymMatrix, Vector};

pub use arch::{ArchModel, ArchParams};
pub use error_components::{EcModel, EcParams, PanelData};
pub use weibull::{MomentEtaConvention, WeibullModel, WeibullParams};

/// How the information matrix I_n is estimated inside a criterion evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoMode {
    /// Uncentered average outer product of per-observation score
    /// contributions (the default; misspecification-robust).
    Opg,
    /// Mean-centered outer product.
    OpgCentered,
    /// Reuse the Hessian (imposes the information matrix equality).
    Hessian,
}

impl Default for InfoMode {
    fn default() -> Self {
        InfoMode::Opg
    }
}

/// Builds the information estimate from per-unit score contributions.
///
/// `contributions` holds one row per independent unit (observation or
/// cluster), each being that unit's contribution to the *average* score, so
/// the estimator of Var(sqrt(n) S_n) is n * sum_i g_i g_i'.
pub(crate) fn opg_from_contributions(
    contributions: &[Vector],
    n: usize,
    average_score: &Vector,
    mode: InfoMode,
    hessian: &SymMatrix,
) -> crate::error::Result<SymMatrix> {
    if mode == InfoMode::Hessian {
        return Ok(hessian.clone());
    }
    let d = average_score.dim();
    let units = contributions.len() as f64;
    let mut m = Matrix::zeros(d, d);
    for g in contributions {
        let centered: Vector = match mode {
            InfoMode::OpgCentered => g.sub(&average_score.scale(1.0 / units)),
            _ => g.clone(),
        };
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    SymMatrix::new(m.scale(n as f64))
}

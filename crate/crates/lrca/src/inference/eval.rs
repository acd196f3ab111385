//! Inputs and outputs of the test statistics: criterion evaluations,
//! restrictions, estimate pairs and test outcomes.

use crate::error::{Error, Result};
use crate::numeric::{chi2_quantile, chi2_sf, Matrix, SymMatrix, Vector};

/// Tolerance for `psi(theta_tilde) = psi0` checks.
pub const RESTRICTION_TOL: f64 = 1e-8;

/// Numerical rank tolerance for the restriction Jacobian.
pub const JACOBIAN_RANK_TOL: f64 = 1e-10;

/// A criterion function, its score, negative Hessian and information
/// estimate, all as per-observation averages at a single point. The sample
/// size travels separately so statistics can reapply their explicit factors
/// of `n`.
#[derive(Debug, Clone)]
pub struct CriterionEvaluation {
    pub point: Vector,
    pub value: f64,
    pub score: Vector,
    pub hessian: SymMatrix,
    pub info: SymMatrix,
    pub n: usize,
}

impl CriterionEvaluation {
    pub fn new(
        point: Vector,
        value: f64,
        score: Vector,
        hessian: SymMatrix,
        info: SymMatrix,
        n: usize,
    ) -> Result<Self> {
        let d = point.dim();
        if score.dim() != d || hessian.dim() != d || info.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "criterion evaluation dims: point {}, score {}, hessian {}, info {}",
                d,
                score.dim(),
                hessian.dim(),
                info.dim()
            )));
        }
        if !value.is_finite() {
            return Err(Error::NonFiniteEvaluation("criterion value".into()));
        }
        if n == 0 {
            return Err(Error::DimensionMismatch("sample size must be positive".into()));
        }
        Ok(CriterionEvaluation { point, value, score, hessian, info, n })
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    /// Same evaluation with the information estimate replaced by the Hessian,
    /// i.e. imposing the information matrix equality.
    pub fn with_info_from_hessian(&self) -> Self {
        let mut e = self.clone();
        e.info = e.hessian.clone();
        e
    }
}

/// A differentiable restriction `psi(theta) = psi0` with `q < d` components.
pub struct Restriction {
    psi: Box<dyn Fn(&Vector) -> Vector + Send + Sync>,
    jac: Box<dyn Fn(&Vector) -> Matrix + Send + Sync>,
    target: Vector,
    q: usize,
}

impl Restriction {
    pub fn new(
        target: Vector,
        psi: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        jac: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        let q = target.dim();
        Restriction { psi: Box::new(psi), jac: Box::new(jac), target, q }
    }

    /// Fixes the listed components at the given values (the subvector case).
    pub fn fix_components(indices: &[usize], values: &[f64]) -> Self {
        assert_eq!(indices.len(), values.len());
        let idx: Vec<usize> = indices.to_vec();
        let idx_jac = idx.clone();
        let target = Vector::from(values.to_vec());
        Restriction::new(
            target,
            move |theta| Vector::from(idx.iter().map(|&i| theta[i]).collect::<Vec<_>>()),
            move |theta| {
                let mut j = Matrix::zeros(idx_jac.len(), theta.dim());
                for (row, &i) in idx_jac.iter().enumerate() {
                    j[(row, i)] = 1.0;
                }
                j
            },
        )
    }

    /// A single linear restriction `c' theta = v`.
    pub fn linear(coeffs: Vector, v: f64) -> Self {
        let c = coeffs.clone();
        let c_jac = coeffs;
        Restriction::new(
            Vector::from(vec![v]),
            move |theta| Vector::from(vec![c.dot(theta)]),
            move |theta| {
                let mut j = Matrix::zeros(1, theta.dim());
                for i in 0..theta.dim() {
                    j[(0, i)] = c_jac[i];
                }
                j
            },
        )
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn target(&self) -> &Vector {
        &self.target
    }

    pub fn psi_at(&self, theta: &Vector) -> Vector {
        (self.psi)(theta)
    }

    /// Jacobian at `theta`, validated for full row rank.
    pub fn jacobian_at(&self, theta: &Vector) -> Result<Matrix> {
        let j = (self.jac)(theta);
        if j.rows() != self.q || j.cols() != theta.dim() {
            return Err(Error::DimensionMismatch(format!(
                "restriction Jacobian is {}x{}, expected {}x{}",
                j.rows(),
                j.cols(),
                self.q,
                theta.dim()
            )));
        }
        if j.row_rank(JACOBIAN_RANK_TOL) < self.q {
            return Err(Error::RankDeficientJacobian);
        }
        Ok(j)
    }

    /// Whether `psi(theta)` hits the target within tolerance.
    pub fn satisfied_at(&self, theta: &Vector) -> bool {
        let scale = self.target.norm_inf().max(1.0);
        self.psi_at(theta).sub(&self.target).norm_inf() <= RESTRICTION_TOL * scale
    }
}

/// Provenance of an estimate handed to a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateProvenance {
    /// Extremum estimator of the criterion itself.
    Extremum,
    /// Any other root-n-consistent auxiliary estimator.
    Auxiliary,
}

/// Paired unrestricted and restricted estimates.
#[derive(Debug, Clone)]
pub struct EstimatePair {
    pub unrestricted: Vector,
    pub restricted: Vector,
    pub unrestricted_provenance: EstimateProvenance,
    pub restricted_provenance: EstimateProvenance,
}

impl EstimatePair {
    pub fn new(
        unrestricted: Vector,
        restricted: Vector,
        unrestricted_provenance: EstimateProvenance,
        restricted_provenance: EstimateProvenance,
        restriction: &Restriction,
    ) -> Result<Self> {
        if !restriction.satisfied_at(&restricted) {
            return Err(Error::ConfigInvalid(
                "restricted estimate does not satisfy the restriction".into(),
            ));
        }
        Ok(EstimatePair {
            unrestricted,
            restricted,
            unrestricted_provenance,
            restricted_provenance,
        })
    }
}

/// Result of a single hypothesis test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub level: f64,
    pub reject: bool,
    /// Set when a slightly negative raw statistic was clamped to zero.
    pub clamped: bool,
}

impl TestOutcome {
    /// Builds an outcome from a raw statistic value, clamping small negative
    /// values (finite-sample noise) to zero with a flag.
    pub fn from_statistic(raw: f64, df: usize, level: f64) -> Result<Self> {
        if !(0.0 < level && level < 1.0) {
            return Err(Error::InvalidProbability(level));
        }
        if !raw.is_finite() {
            return Err(Error::NonFiniteEvaluation("test statistic".into()));
        }
        let (statistic, clamped) = if raw < 0.0 { (0.0, true) } else { (raw, false) };
        let critical = chi2_quantile(df, 1.0 - level)?;
        Ok(TestOutcome {
            statistic,
            df,
            p_value: chi2_sf(df, statistic)?,
            level,
            reject: statistic >= critical,
            clamped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fix_components_restriction() {
        let r = Restriction::fix_components(&[0, 2], &[1.0, 3.0]);
        let theta = Vector::from(vec![1.0, 9.0, 3.0]);
        assert!(r.satisfied_at(&theta));
        assert_eq!(r.q(), 2);
        let j = r.jacobian_at(&theta).unwrap();
        assert_eq!(j[(0, 0)], 1.0);
        assert_eq!(j[(1, 2)], 1.0);
        assert_eq!(j[(0, 1)], 0.0);
        assert!(!r.satisfied_at(&Vector::from(vec![1.1, 9.0, 3.0])));
    }

    #[test]
    fn rank_deficient_jacobian_rejected() {
        let r = Restriction::new(
            Vector::from(vec![0.0, 0.0]),
            |t| Vector::from(vec![t[0], 2.0 * t[0]]),
            |t| {
                let mut j = Matrix::zeros(2, t.dim());
                j[(0, 0)] = 1.0;
                j[(1, 0)] = 2.0;
                j
            },
        );
        assert!(matches!(
            r.jacobian_at(&Vector::from(vec![0.0, 1.0])),
            Err(Error::RankDeficientJacobian)
        ));
    }

    #[test]
    fn outcome_clamps_negative_statistic() {
        let o = TestOutcome::from_statistic(-1e-12, 1, 0.05).unwrap();
        assert_eq!(o.statistic, 0.0);
        assert!(o.clamped);
        assert!(!o.reject);
        assert_eq!(o.p_value, 1.0);
    }

    #[test]
    fn outcome_reject_matches_quantile() {
        let crit = chi2_quantile(1, 0.95).unwrap();
        let o = TestOutcome::from_statistic(crit + 1e-9, 1, 0.05).unwrap();
        assert!(o.reject);
        let o2 = TestOutcome::from_statistic(crit - 1e-6, 1, 0.05).unwrap();
        assert!(!o2.reject);
    }

    #[test]
    fn estimate_pair_checks_restriction() {
        let r = Restriction::fix_components(&[0], &[0.0]);
        let bad = EstimatePair::new(
            Vector::from(vec![0.5, 1.0]),
            Vector::from(vec![0.5, 1.0]),
            EstimateProvenance::Extremum,
            EstimateProvenance::Extremum,
            &r,
        );
        assert!(bad.is_err());
    }
}

//! The adjusted-criterion test statistics and their classical companions.

use super::eval::{CriterionEvaluation, Restriction, TestOutcome};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, SymMatrix, Vector};

/// Unrestricted adjusted criterion: L + 1/2 S' H^{-1} S.
pub fn adjusted_unrestricted(e: &CriterionEvaluation) -> Result<f64> {
    let chol = e.hessian.cholesky()?;
    let hinv_s = chol.solve_vec(&e.score);
    Ok(e.value + 0.5 * e.score.dot(&hinv_s))
}

/// Projection-style variance matrix
/// W = H^{-1} - H^{-1} J' [J H^{-1} I H^{-1} J']^{-1} J H^{-1},
/// with J the restriction Jacobian at the evaluation point.
pub fn projection_matrix(e: &CriterionEvaluation, r: &Restriction) -> Result<SymMatrix> {
    let j = r.jacobian_at(&e.point)?;
    let chol = e.hessian.cholesky()?;
    let hinv = chol.inverse();
    // A = H^{-1} J'  (d x q)
    let a = hinv.as_matrix().mul(&j.transpose());
    // middle = A' I A  (q x q)
    let middle = SymMatrix::new(a.transpose().mul(&e.info.as_matrix().mul(&a)))?;
    let middle_inv = middle.cholesky()?.inverse();
    let w = hinv.as_matrix().sub(&a.mul(&middle_inv.as_matrix().mul(&a.transpose())));
    SymMatrix::new(w)
}

/// Restricted adjusted criterion: L + 1/2 S' W S.
pub fn adjusted_restricted(e: &CriterionEvaluation, r: &Restriction) -> Result<f64> {
    let w = projection_matrix(e, r)?;
    Ok(e.value + 0.5 * w.quad(&e.score))
}

/// The likelihood-ratio-type C(alpha) statistic:
/// 2n (Lu(theta_hat) - Lr(theta_tilde)), chi-square with q degrees of freedom
/// under the null.
pub fn lrc_alpha(
    unres: &CriterionEvaluation,
    res: &CriterionEvaluation,
    r: &Restriction,
    level: f64,
) -> Result<TestOutcome> {
    if unres.n != res.n {
        return Err(Error::SampleSizeMismatch(unres.n, res.n));
    }
    if !r.satisfied_at(&res.point) {
        return Err(Error::ConfigInvalid(
            "restricted evaluation point does not satisfy the restriction".into(),
        ));
    }
    let lu = adjusted_unrestricted(unres)?;
    let lr = adjusted_restricted(res, r)?;
    let raw = 2.0 * unres.n as f64 * (lu - lr);
    TestOutcome::from_statistic(raw, r.q(), level)
}

/// Score-type C(alpha) statistic:
/// n S' H^{-1} J' [J H^{-1} I H^{-1} J']^{-1} J H^{-1} S at the restricted
/// point.
pub fn c_alpha(e: &CriterionEvaluation, r: &Restriction, level: f64) -> Result<TestOutcome> {
    let j = r.jacobian_at(&e.point)?;
    let chol = e.hessian.cholesky()?;
    let hinv = chol.inverse();
    let a = hinv.as_matrix().mul(&j.transpose());
    let middle = SymMatrix::new(a.transpose().mul(&e.info.as_matrix().mul(&a)))?;
    // u = J H^{-1} S
    let u = a.transpose().mul_vec(&e.score);
    let stat = e.n as f64 * u.dot(&middle.cholesky()?.solve_vec(&u));
    TestOutcome::from_statistic(stat, r.q(), level)
}

fn block(m: &SymMatrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows.start + i, cols.start + j)])
}

/// Subvector LRC-alpha under the information matrix equality: the restricted
/// adjustment uses only the nuisance score block, Lr = L + 1/2 S2' H22^{-1} S2.
/// Degrees of freedom d1; `res.point` must have its first d1 entries at the
/// tested values.
pub fn lrc_alpha_subvector(
    unres: &CriterionEvaluation,
    res: &CriterionEvaluation,
    d1: usize,
    level: f64,
) -> Result<TestOutcome> {
    if unres.n != res.n {
        return Err(Error::SampleSizeMismatch(unres.n, res.n));
    }
    let d = res.dim();
    if d1 == 0 || d1 >= d {
        return Err(Error::DimensionMismatch(format!("d1 = {d1} out of range for d = {d}")));
    }
    // unrestricted side uses H only
    let chol_u = unres.hessian.cholesky()?;
    let lu = unres.value + 0.5 * unres.score.dot(&chol_u.solve_vec(&unres.score));

    let h22 = SymMatrix::new(block(&res.hessian, d1..d, d1..d))?;
    let s2 = Vector::from((d1..d).map(|i| res.score[i]).collect::<Vec<_>>());
    let lr = res.value + 0.5 * s2.dot(&h22.cholesky()?.solve_vec(&s2));

    let raw = 2.0 * unres.n as f64 * (lu - lr);
    TestOutcome::from_statistic(raw, d1, level)
}

/// Classical likelihood ratio statistic 2n (L(theta_hat) - L(theta_tilde)).
/// Negative values (non-nested or noisy fits) are clamped to zero and flagged.
pub fn classic_lr(
    unres: &CriterionEvaluation,
    res: &CriterionEvaluation,
    df: usize,
    level: f64,
) -> Result<TestOutcome> {
    if unres.n != res.n {
        return Err(Error::SampleSizeMismatch(unres.n, res.n));
    }
    let raw = 2.0 * unres.n as f64 * (unres.value - res.value);
    TestOutcome::from_statistic(raw, df, level)
}

/// Classical score (LM) statistic in Lagrange multiplier form:
/// n lambda' [J H^{-1} J'] lambda with lambda = (J J')^{-1} J S. At an interior
/// restricted extremum S = J' lambda holds exactly and this equals
/// n S' H^{-1} S; when the nuisance first-order condition fails (restricted
/// fit pinned at a bound) only the multiplier component of the score enters.
pub fn classic_lm(res: &CriterionEvaluation, r: &Restriction, level: f64) -> Result<TestOutcome> {
    let j = r.jacobian_at(&res.point)?;
    let gram = SymMatrix::new(j.mul(&j.transpose()))?;
    let lambda = gram.cholesky()?.solve_vec(&j.mul_vec(&res.score));
    let chol = res.hessian.cholesky()?;
    let jhj = SymMatrix::new(j.mul(&chol.solve_mat(&j.transpose())))?;
    let stat = res.n as f64 * jhj.quad(&lambda);
    TestOutcome::from_statistic(stat, r.q(), level)
}

/// Wald statistic (psi(theta_hat) - psi0)' [J cov J']^{-1} (psi(theta_hat) - psi0),
/// where `cov` is the covariance of theta_hat (the 1/n factor already folded in).
pub fn wald(
    theta_hat: &Vector,
    cov: &SymMatrix,
    r: &Restriction,
    level: f64,
) -> Result<TestOutcome> {
    if cov.dim() != theta_hat.dim() {
        return Err(Error::DimensionMismatch("covariance vs estimate".into()));
    }
    let j = r.jacobian_at(theta_hat)?;
    let dev = r.psi_at(theta_hat).sub(r.target());
    let v = SymMatrix::new(j.mul(&cov.as_matrix().mul(&j.transpose())))?;
    let stat = dev.dot(&v.cholesky()?.solve_vec(&dev));
    TestOutcome::from_statistic(stat, r.q(), level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Matrix;

    fn eval(
        point: Vec<f64>,
        value: f64,
        score: Vec<f64>,
        hessian: SymMatrix,
        info: SymMatrix,
        n: usize,
    ) -> CriterionEvaluation {
        CriterionEvaluation::new(
            Vector::from(point),
            value,
            Vector::from(score),
            hessian,
            info,
            n,
        )
        .unwrap()
    }

    #[test]
    fn adjusted_unrestricted_zero_score() {
        let e = eval(vec![0.0], 1.5, vec![0.0], SymMatrix::diag(&[2.0]), SymMatrix::diag(&[2.0]), 10);
        assert_eq!(adjusted_unrestricted(&e).unwrap(), 1.5);
    }

    #[test]
    fn adjusted_unrestricted_scalar() {
        // 1 + 0.5 * 0.2^2 / 2 = 1.01
        let e = eval(vec![0.0], 1.0, vec![0.2], SymMatrix::diag(&[2.0]), SymMatrix::diag(&[2.0]), 10);
        assert!((adjusted_unrestricted(&e).unwrap() - 1.01).abs() < 1e-14);
    }

    #[test]
    fn adjusted_unrestricted_identity_hessian() {
        // 0 + 0.5 * ||(1,1)||^2 = 1
        let e = eval(
            vec![0.0, 0.0],
            0.0,
            vec![1.0, 1.0],
            SymMatrix::identity(2),
            SymMatrix::identity(2),
            10,
        );
        assert!((adjusted_unrestricted(&e).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projection_annihilates_jacobian_when_info_equals_hessian() {
        let h = SymMatrix::new(
            Matrix::from_rows(&[vec![3.0, 0.7, 0.1], vec![0.7, 2.0, 0.3], vec![0.1, 0.3, 1.5]])
                .unwrap(),
        )
        .unwrap();
        let e = eval(vec![0.1, -0.2, 0.3], 0.0, vec![0.0; 3], h.clone(), h, 50);
        let r = Restriction::fix_components(&[0], &[0.1]);
        let w = projection_matrix(&e, &r).unwrap();
        let j = r.jacobian_at(&e.point).unwrap();
        let jw = j.mul(w.as_matrix());
        assert!(jw.max_abs() < 1e-12, "psi_dot W = {jw:?}");
    }

    #[test]
    fn projection_simple_case() {
        // d=2, q=1, H=I=I2, psi_dot=(1,0) -> W = diag(0, 1)
        let e = eval(
            vec![0.0, 0.0],
            0.0,
            vec![0.0, 0.0],
            SymMatrix::identity(2),
            SymMatrix::identity(2),
            10,
        );
        let r = Restriction::fix_components(&[0], &[0.0]);
        let w = projection_matrix(&e, &r).unwrap();
        assert!(w[(0, 0)].abs() < 1e-14);
        assert!((w[(1, 1)] - 1.0).abs() < 1e-14);
        assert!(w[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn adjusted_restricted_simple_case() {
        // 0.5 * S' diag(0,1) S = 0.5 * 16 = 8
        let e = eval(
            vec![0.0, 0.0],
            0.0,
            vec![3.0, 4.0],
            SymMatrix::identity(2),
            SymMatrix::identity(2),
            10,
        );
        let r = Restriction::fix_components(&[0], &[0.0]);
        assert!((adjusted_restricted(&e, &r).unwrap() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn adjusted_restricted_zero_score() {
        let e = eval(
            vec![0.0, 0.5],
            -2.5,
            vec![0.0, 0.0],
            SymMatrix::identity(2),
            SymMatrix::identity(2),
            10,
        );
        let r = Restriction::fix_components(&[0], &[0.0]);
        assert_eq!(adjusted_restricted(&e, &r).unwrap(), -2.5);
    }

    #[test]
    fn c_alpha_simple_case() {
        // d=2, q=1, n=100, H=I=I2, psi_dot=(1,0), S=(0.3,0.7) -> 100 * 0.09 = 9
        let e = eval(
            vec![0.0, 0.0],
            0.0,
            vec![0.3, 0.7],
            SymMatrix::identity(2),
            SymMatrix::identity(2),
            100,
        );
        let r = Restriction::fix_components(&[0], &[0.0]);
        let out = c_alpha(&e, &r, 0.05).unwrap();
        assert!((out.statistic - 9.0).abs() < 1e-12);
        assert_eq!(out.df, 1);
    }

    #[test]
    fn c_alpha_zero_score() {
        let e = eval(
            vec![0.0, 0.0],
            0.0,
            vec![0.0, 0.0],
            SymMatrix::identity(2),
            SymMatrix::identity(2),
            100,
        );
        let r = Restriction::fix_components(&[0], &[0.0]);
        assert_eq!(c_alpha(&e, &r, 0.05).unwrap().statistic, 0.0);
    }

    #[test]
    fn lrc_equals_c_alpha_when_estimates_coincide() {
        // same evaluation in both slots collapses LRC_alpha to C_alpha
        let h = SymMatrix::new(
            Matrix::from_rows(&[vec![2.0, 0.4], vec![0.4, 1.5]]).unwrap(),
        )
        .unwrap();
        let i = SymMatrix::new(
            Matrix::from_rows(&[vec![1.8, 0.2], vec![0.2, 1.2]]).unwrap(),
        )
        .unwrap();
        let e = eval(vec![0.0, 0.9], -1.0, vec![0.25, -0.4], h, i, 200);
        let r = Restriction::fix_components(&[0], &[0.0]);
        let lrc = lrc_alpha(&e, &e, &r, 0.05).unwrap();
        let ca = c_alpha(&e, &r, 0.05).unwrap();
        assert!(
            (lrc.statistic - ca.statistic).abs() <= 1e-10 * ca.statistic.max(1.0),
            "lrc {} vs c_alpha {}",
            lrc.statistic,
            ca.statistic
        );
    }

    #[test]
    fn lrc_reduces_to_lr_for_interior_extrema_with_info_equality() {
        let h = SymMatrix::new(
            Matrix::from_rows(&[vec![2.0, 0.4], vec![0.4, 1.5]]).unwrap(),
        )
        .unwrap();
        // interior unrestricted extremum: S = 0; restricted extremum with
        // I = H: score proportional to a Jacobian row so W S = 0
        let unres = eval(vec![0.3, 0.9], -0.8, vec![0.0, 0.0], h.clone(), h.clone(), 200);
        // Lagrangian first-order condition: S = psi_dot' lambda, which makes W S = 0
        let res = eval(vec![0.0, 1.1], -0.95, vec![0.37, 0.0], h.clone(), h, 200);
        let r = Restriction::fix_components(&[0], &[0.0]);
        let lrc = lrc_alpha(&unres, &res, &r, 0.05).unwrap();
        let lr = classic_lr(&unres, &res, 1, 0.05).unwrap();
        assert!((lrc.statistic - lr.statistic).abs() < 1e-10);
    }

    #[test]
    fn sample_size_mismatch_detected() {
        let e1 = eval(vec![0.0], 0.0, vec![0.0], SymMatrix::diag(&[1.0]), SymMatrix::diag(&[1.0]), 10);
        let mut e2 = e1.clone();
        e2.n = 20;
        let r = Restriction::fix_components(&[0], &[0.0]);
        assert!(matches!(
            lrc_alpha(&e1, &e2, &r, 0.05),
            Err(Error::SampleSizeMismatch(10, 20))
        ));
    }

    #[test]
    fn lm_equals_c_alpha_with_info_equality_at_restricted_mle() {
        // nuisance score block zero, info := hessian
        let h = SymMatrix::new(
            Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.5]]).unwrap(),
        )
        .unwrap();
        let e = eval(vec![0.0, 0.7], 0.0, vec![0.6, 0.0], h.clone(), h, 150);
        let r = Restriction::fix_components(&[0], &[0.0]);
        let lm = classic_lm(&e, &r, 0.05).unwrap();
        let ca = c_alpha(&e, &r, 0.05).unwrap();
        assert!((lm.statistic - ca.statistic).abs() < 1e-10);
    }

    #[test]
    fn wald_quadratic_case() {
        // quadratic criterion with A = diag(2, 1), psi = theta_1, psi0 = 0,
        // theta* = (0.3, -0.2), n = 100: statistic = n * 0.3^2 / (A^{-1})_11
        let a = SymMatrix::diag(&[2.0, 1.0]);
        let cov = SymMatrix::new(a.cholesky().unwrap().inverse().as_matrix().scale(1.0 / 100.0))
            .unwrap();
        let r = Restriction::fix_components(&[0], &[0.0]);
        let out = wald(&Vector::from(vec![0.3, -0.2]), &cov, &r, 0.05).unwrap();
        assert!((out.statistic - 100.0 * 0.09 * 2.0).abs() < 1e-10);
    }

    #[test]
    fn lr_zero_when_fits_coincide() {
        let e = eval(vec![0.0], -1.0, vec![0.0], SymMatrix::diag(&[1.0]), SymMatrix::diag(&[1.0]), 10);
        assert_eq!(classic_lr(&e, &e, 1, 0.05).unwrap().statistic, 0.0);
    }
}

//! Gaussian quasi-likelihood for the ARCH(p) model
//! x_t = sigma_t eps_t, sigma_t^2 = omega + sum_j alpha_j x_{t-j}^2,
//! with zero presample values.

use super::{opg_from_contributions, InfoMode};
use crate::error::{Error, Result};
use crate::inference::CriterionEvaluation;
use crate::numeric::{spd_solve_vec, Matrix, SymMatrix, Vector};
use crate::optimize::{maximize_box, maximize_fixed, Bounds, FitResult, MaximizeOpts};
use rand::Rng;
use rand_distr::StandardNormal;

/// Lower bound kept on the intercept so the conditional variance stays
/// positive at restricted estimates.
pub const OMEGA_FLOOR: f64 = 1e-8;

/// Upper bound on each lag coefficient during quasi-maximum-likelihood fits.
pub const ALPHA_CAP: f64 = 0.9999;

/// Validated ARCH parameters: omega > 0, alpha_j >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchParams {
    pub omega: f64,
    pub alpha: Vec<f64>,
}

impl ArchParams {
    pub fn new(omega: f64, alpha: Vec<f64>) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::NonPositiveVariance(omega));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::ConfigInvalid("lag coefficients must be finite and nonnegative".into()));
        }
        Ok(ArchParams { omega, alpha })
    }

    pub fn dim(&self) -> usize {
        1 + self.alpha.len()
    }

    pub fn to_vector(&self) -> Vector {
        let mut v = vec![self.omega];
        v.extend_from_slice(&self.alpha);
        Vector::from(v)
    }

    pub fn from_vector(theta: &Vector) -> Result<Self> {
        ArchParams::new(theta[0], theta.as_slice()[1..].to_vec())
    }

    /// Requires sum of alphas < 1 (covariance stationarity); needed for
    /// simulation, not for evaluating the criterion.
    pub fn require_stationary(&self) -> Result<()> {
        let s: f64 = self.alpha.iter().sum();
        if s >= 1.0 {
            return Err(Error::NonStationary(s));
        }
        Ok(())
    }
}

/// Simulates `n` observations with Gaussian innovations and zero presample
/// values, plus a burn-in that is discarded.
pub fn arch_simulate(params: &ArchParams, n: usize, burn_in: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    params.require_stationary()?;
    let p = params.alpha.len();
    let total = n + burn_in;
    let mut x = Vec::with_capacity(total);
    for t in 0..total {
        let mut s2 = params.omega;
        for j in 0..p {
            if t > j {
                let lag = x[t - 1 - j];
                s2 += params.alpha[j] * lag * lag;
            }
        }
        let eps: f64 = rng.sample(StandardNormal);
        x.push(s2.sqrt() * eps);
    }
    Ok(x.split_off(burn_in))
}

/// ARCH(p) quasi-likelihood criterion over an observed series. The parameter
/// vector is (omega, alpha_1, ..., alpha_p).
pub struct ArchModel {
    series: Vec<f64>,
    sq: Vec<f64>,
    p: usize,
}

impl ArchModel {
    pub fn new(series: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::ConfigInvalid("ARCH order must be at least 1".into()));
        }
        if series.len() <= p + 1 {
            return Err(Error::Data(format!(
                "series length {} too short for ARCH({})",
                series.len(),
                p
            )));
        }
        if series.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEvaluation("series entry".into()));
        }
        let sq = series.iter().map(|x| x * x).collect();
        Ok(ArchModel { series, sq, p })
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.series.len()
    }

    pub fn dim(&self) -> usize {
        self.p + 1
    }

    /// Conditional variances sigma_t^2 at `theta` (presample squares are zero).
    fn variances(&self, theta: &Vector) -> Vec<f64> {
        let n = self.series.len();
        let mut out = Vec::with_capacity(n);
        for t in 0..n {
            let mut s2 = theta[0];
            for j in 0..self.p {
                if t > j {
                    s2 += theta[1 + j] * self.sq[t - 1 - j];
                }
            }
            out.push(s2);
        }
        out
    }

    /// Regressor v_t = (1, x_{t-1}^2, ..., x_{t-p}^2).
    fn regressor(&self, t: usize) -> Vec<f64> {
        let mut v = vec![1.0];
        for j in 0..self.p {
            v.push(if t > j { self.sq[t - 1 - j] } else { 0.0 });
        }
        v
    }

    /// Average quasi-log-likelihood, -inf outside the admissible region. The
    /// 2 pi constant is dropped; it cancels in every statistic.
    pub fn loglik(&self, theta: &Vector) -> f64 {
        if theta.dim() != self.dim() {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for (t, &s2) in self.variances(theta).iter().enumerate() {
            if !(s2 > 0.0) || !s2.is_finite() {
                return f64::NEG_INFINITY;
            }
            total += -0.5 * (s2.ln() + self.sq[t] / s2);
        }
        total / self.series.len() as f64
    }

    /// Analytic average score: (1/n) sum_t (x_t^2 - sigma_t^2) / (2 sigma_t^4) v_t.
    pub fn score(&self, theta: &Vector) -> Result<Vector> {
        let n = self.series.len();
        let d = self.dim();
        let mut s = vec![0.0; d];
        for (t, &s2) in self.variances(theta).iter().enumerate() {
            if !(s2 > 0.0) {
                return Err(Error::NonPositiveVariance(s2));
            }
            let w = 0.5 * (self.sq[t] - s2) / (s2 * s2);
            for (k, v) in self.regressor(t).into_iter().enumerate() {
                s[k] += w * v;
            }
        }
        Ok(Vector::from(s.into_iter().map(|x| x / n as f64).collect::<Vec<_>>()))
    }

    /// Full criterion evaluation: value, analytic score, curvature matrix and
    /// the information estimate in the requested mode. The curvature uses the
    /// conditional expectation of the negative Hessian,
    /// H_n = avg v_t v_t' / (2 sigma_t^4), which is positive definite whenever
    /// the regressors span; the raw second derivative carries a
    /// (2 x_t^2 - sigma_t^2) factor that can turn indefinite in small samples
    /// and only adds noise around the same limit.
    pub fn evaluate(&self, theta: &Vector, info: InfoMode) -> Result<CriterionEvaluation> {
        let n = self.series.len();
        let d = self.dim();
        let variances = self.variances(theta);
        let mut value = 0.0;
        let mut score = vec![0.0; d];
        let mut hess = Matrix::zeros(d, d);
        let mut contributions = Vec::with_capacity(n);
        for (t, &s2) in variances.iter().enumerate() {
            if !(s2 > 0.0) || !s2.is_finite() {
                return Err(Error::NonPositiveVariance(s2));
            }
            let x2 = self.sq[t];
            value += -0.5 * (s2.ln() + x2 / s2);
            let v = self.regressor(t);
            let w = 0.5 * (x2 - s2) / (s2 * s2);
            let hw = 0.5 / (s2 * s2);
            let mut g = vec![0.0; d];
            for k in 0..d {
                score[k] += w * v[k];
                g[k] = w * v[k] / n as f64;
                for l in 0..d {
                    hess[(k, l)] += hw * v[k] * v[l];
                }
            }
            contributions.push(Vector::from(g));
        }
        let score = Vector::from(score.into_iter().map(|x| x / n as f64).collect::<Vec<_>>());
        let hessian = SymMatrix::new(hess.scale(1.0 / n as f64))?;
        let info = opg_from_contributions(&contributions, n, &score, info, &hessian)?;
        CriterionEvaluation::new(theta.clone(), value / n as f64, score, hessian, info, n)
    }

    /// Box constraints for quasi-maximum-likelihood fits.
    pub fn qmle_bounds(&self) -> Bounds {
        let mut lower = vec![OMEGA_FLOOR];
        let mut upper = vec![f64::INFINITY];
        lower.extend(std::iter::repeat(0.0).take(self.p));
        upper.extend(std::iter::repeat(ALPHA_CAP).take(self.p));
        Bounds::new(lower, upper).expect("valid ARCH bounds")
    }

    /// Unrestricted quasi-maximum-likelihood fit.
    pub fn fit_qmle(&self, start: &Vector, opts: &MaximizeOpts) -> Result<FitResult> {
        let bounds = self.qmle_bounds();
        let f = |t: &Vector| self.loglik(t);
        let g = |t: &Vector| self.score(t);
        maximize_box(&f, Some(&g), &bounds.project(start), &bounds, opts)
    }

    /// Quasi-maximum-likelihood fit with the listed coordinates pinned.
    pub fn fit_qmle_fixed(
        &self,
        start: &Vector,
        fixed: &[(usize, f64)],
        opts: &MaximizeOpts,
    ) -> Result<FitResult> {
        let bounds = self.qmle_bounds();
        let f = |t: &Vector| self.loglik(t);
        let g = |t: &Vector| self.score(t);
        maximize_fixed(&f, Some(&g), &bounds.project(start), &bounds, fixed, opts)
    }

    /// Least-squares regression of x_t^2 on (1, x_{t-1}^2, ..., x_{t-p}^2),
    /// the closed-form auxiliary estimator. Unconstrained; coefficients may be
    /// negative.
    pub fn ols(&self) -> Result<Vector> {
        let n = self.series.len();
        let d = self.dim();
        let mut xtx = Matrix::zeros(d, d);
        let mut xty = Vector::zeros(d);
        for t in 0..n {
            let v = self.regressor(t);
            for k in 0..d {
                xty[k] += v[k] * self.sq[t];
                for l in 0..d {
                    xtx[(k, l)] += v[k] * v[l];
                }
            }
        }
        let xtx = SymMatrix::new(xtx)?;
        spd_solve_vec(&xtx, &xty).map_err(|_| Error::SingularDesign)
    }

    /// Sign-constrained least squares: all coefficients nonnegative, then the
    /// intercept floored at `OMEGA_FLOOR`. Lawson-Hanson active set iteration.
    pub fn ols_nonnegative(&self) -> Result<Vector> {
        let n = self.series.len();
        let d = self.dim();
        let mut xtx = Matrix::zeros(d, d);
        let mut xty = vec![0.0; d];
        for t in 0..n {
            let v = self.regressor(t);
            for k in 0..d {
                xty[k] += v[k] * self.sq[t];
                for l in 0..d {
                    xtx[(k, l)] += v[k] * v[l];
                }
            }
        }
        let mut beta = nnls(&xtx, &xty)?;
        beta[0] = beta[0].max(OMEGA_FLOOR);
        Ok(Vector::from(beta))
    }

    /// Nonnegative least squares with the listed coordinates pinned at zero,
    /// the restricted auxiliary estimator.
    pub fn ols_nonnegative_fixed_zero(&self, zeroed: &[usize]) -> Result<Vector> {
        let d = self.dim();
        let keep: Vec<usize> = (0..d).filter(|i| !zeroed.contains(i)).collect();
        if keep.is_empty() || zeroed.iter().any(|&i| i >= d) {
            return Err(Error::ConfigInvalid("invalid zeroed index set".into()));
        }
        let n = self.series.len();
        let m = keep.len();
        let mut xtx = Matrix::zeros(m, m);
        let mut xty = vec![0.0; m];
        for t in 0..n {
            let v = self.regressor(t);
            for (a, &ka) in keep.iter().enumerate() {
                xty[a] += v[ka] * self.sq[t];
                for (b, &kb) in keep.iter().enumerate() {
                    xtx[(a, b)] += v[ka] * v[kb];
                }
            }
        }
        let sub = nnls(&xtx, &xty)?;
        let mut full = vec![0.0; d];
        for (a, &ka) in keep.iter().enumerate() {
            full[ka] = sub[a];
        }
        full[0] = full[0].max(OMEGA_FLOOR);
        Ok(Vector::from(full))
    }
}

/// Nonnegative least squares given the normal-equation pieces X'X and X'y.
/// Classic active-set iteration; terminates for any PD X'X.
fn nnls(xtx: &Matrix, xty: &[f64]) -> Result<Vec<f64>> {
    let d = xty.len();
    let tol = 1e-10 * xty.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut passive = vec![false; d];
    let mut x = vec![0.0; d];

    let solve_passive = |passive: &[bool]| -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..d).filter(|&i| passive[i]).collect();
        let m = idx.len();
        let a = SymMatrix::new(Matrix::from_fn(m, m, |i, j| xtx[(idx[i], idx[j])]))
            .map_err(|_| Error::SingularDesign)?;
        let b = Vector::from(idx.iter().map(|&i| xty[i]).collect::<Vec<_>>());
        let z = spd_solve_vec(&a, &b).map_err(|_| Error::SingularDesign)?;
        let mut full = vec![0.0; d];
        for (k, &i) in idx.iter().enumerate() {
            full[i] = z[k];
        }
        Ok(full)
    };

    for _ in 0..(3 * d + 10) {
        // gradient of the residual sum of squares, negated
        let mut w = vec![0.0; d];
        for i in 0..d {
            w[i] = xty[i] - (0..d).map(|j| xtx[(i, j)] * x[j]).sum::<f64>();
        }
        let cand = (0..d)
            .filter(|&i| !passive[i])
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        match cand {
            Some(i) if w[i] > tol => passive[i] = true,
            _ => return Ok(x),
        }
        loop {
            let z = solve_passive(&passive)?;
            if (0..d).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            // step toward z until the first passive coordinate hits zero
            let mut alpha = 1.0f64;
            let mut drop_idx = None;
            for i in (0..d).filter(|&i| passive[i] && z[i] <= 0.0) {
                let a = x[i] / (x[i] - z[i]);
                if a < alpha {
                    alpha = a;
                    drop_idx = Some(i);
                }
            }
            for i in 0..d {
                if passive[i] {
                    x[i] += alpha * (z[i] - x[i]);
                }
            }
            if let Some(i) = drop_idx {
                passive[i] = false;
                x[i] = 0.0;
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::fd_gradient;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_model(seed: u64, n: usize, p: usize) -> ArchModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ArchParams::new(1.0, vec![0.2, 0.1]).unwrap();
        let x = arch_simulate(&params, n, 50, &mut rng).unwrap();
        ArchModel::new(x, p).unwrap()
    }

    #[test]
    fn loglik_closed_form_without_lags() {
        // with all alphas zero the criterion is -(1/2)(ln omega + m2/omega)
        let model = sample_model(7, 400, 2);
        let omega = 1.3f64;
        let m2: f64 = model.sq.iter().sum::<f64>() / model.n() as f64;
        let expected = -0.5 * (omega.ln() + m2 / omega);
        let got = model.loglik(&Vector::from(vec![omega, 0.0, 0.0]));
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn score_matches_finite_differences() {
        let model = sample_model(11, 300, 2);
        for theta in [
            Vector::from(vec![0.8, 0.15, 0.05]),
            Vector::from(vec![1.5, 0.0, 0.3]),
            Vector::from(vec![0.5, 0.4, 0.2]),
        ] {
            let analytic = model.score(&theta).unwrap();
            let fd = fd_gradient(|t| model.loglik(t), &theta, 1e-5).unwrap();
            assert!(
                analytic.sub(&fd).norm_inf() <= 1e-5 * analytic.norm_inf().max(1.0),
                "score mismatch at {:?}",
                theta
            );
        }
    }

    #[test]
    fn curvature_matches_second_derivative_on_self_consistent_series() {
        // On a series with x_t^2 = sigma_t^2 identically, the raw second
        // derivative collapses to the conditional-expectation form, so the
        // stored curvature must equal the negated finite-difference Hessian.
        let (omega, alpha) = (1.0, 0.5);
        let mut series = Vec::with_capacity(40);
        let mut prev_sq = 0.0;
        for _ in 0..40 {
            let s2: f64 = omega + alpha * prev_sq;
            series.push(s2.sqrt());
            prev_sq = s2;
        }
        let model = ArchModel::new(series, 1).unwrap();
        let theta = Vector::from(vec![omega, alpha]);
        let e = model.evaluate(&theta, InfoMode::Opg).unwrap();
        let h = crate::numeric::fd_hessian(|t| model.loglik(t), &theta, 1e-4).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (e.hessian[(i, j)] + h[(i, j)]).abs() <= 2e-4 * e.hessian.as_matrix().max_abs(),
                    "curvature mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn curvature_is_scaled_regressor_gram() {
        let model = sample_model(13, 250, 2);
        let theta = Vector::from(vec![0.9, 0.2, 0.1]);
        let e = model.evaluate(&theta, InfoMode::Opg).unwrap();
        let n = model.n();
        let variances = model.variances(&theta);
        let direct = Matrix::from_fn(3, 3, |i, j| {
            (0..n)
                .map(|t| {
                    let v = model.regressor(t);
                    v[i] * v[j] / (2.0 * variances[t] * variances[t] * n as f64)
                })
                .sum()
        });
        for i in 0..3 {
            for j in 0..3 {
                assert!((e.hessian[(i, j)] - direct[(i, j)]).abs() <= 1e-12 * direct.max_abs());
            }
        }
    }

    #[test]
    fn opg_is_average_outer_product() {
        let model = sample_model(17, 100, 1);
        let theta = Vector::from(vec![1.1, 0.2]);
        let e = model.evaluate(&theta, InfoMode::Opg).unwrap();
        // direct computation from per-observation scores
        let n = model.n();
        let mut direct = Matrix::zeros(2, 2);
        let variances = model.variances(&theta);
        for t in 0..n {
            let s2 = variances[t];
            let w = 0.5 * (model.sq[t] - s2) / (s2 * s2);
            let v = model.regressor(t);
            for i in 0..2 {
                for j in 0..2 {
                    direct[(i, j)] += (w * v[i]) * (w * v[j]) / n as f64;
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((e.info[(i, j)] - direct[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn simulation_mean_and_variance() {
        let params = ArchParams::new(1.0, vec![0.1, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let x = arch_simulate(&params, n, 200, &mut rng).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        // unconditional variance omega / (1 - sum alpha)
        let target = 1.0 / 0.9;
        let se_mean = (target / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean {mean}");
        assert!((var - target).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn simulation_requires_stationarity() {
        let params = ArchParams::new(1.0, vec![0.6, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            arch_simulate(&params, 10, 0, &mut rng),
            Err(Error::NonStationary(_))
        ));
    }

    #[test]
    fn nnls_matches_pattern_enumeration() {
        // oracle: enumerate all sign patterns, solve the equality-constrained
        // LS for each, keep the feasible pattern with smallest objective
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..25 {
            let model = sample_model(100 + case, 150, 2);
            let d = model.dim();
            let mut xtx = Matrix::zeros(d, d);
            let mut xty = vec![0.0; d];
            for t in 0..model.n() {
                let v = model.regressor(t);
                for k in 0..d {
                    xty[k] += v[k] * model.sq[t];
                    for l in 0..d {
                        xtx[(k, l)] += v[k] * v[l];
                    }
                }
            }
            // random perturbation of the target so zero patterns actually occur
            for k in 0..d {
                xty[k] += rng.gen_range(-0.5..0.5) * xty[k].abs();
            }
            let got = nnls(&xtx, &xty).unwrap();

            let mut best: Option<(f64, Vec<f64>)> = None;
            for mask in 0..(1usize << d) {
                let passive: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
                let m = passive.len();
                let mut x = vec![0.0; d];
                if m > 0 {
                    let a = SymMatrix::new(Matrix::from_fn(m, m, |i, j| {
                        xtx[(passive[i], passive[j])]
                    }))
                    .unwrap();
                    let b = Vector::from(passive.iter().map(|&i| xty[i]).collect::<Vec<_>>());
                    let z = match spd_solve_vec(&a, &b) {
                        Ok(z) => z,
                        Err(_) => continue,
                    };
                    for (k, &i) in passive.iter().enumerate() {
                        x[i] = z[k];
                    }
                }
                if x.iter().any(|&v| v < 0.0) {
                    continue;
                }
                // objective: x'X'Xx - 2 x'X'y (constant dropped)
                let mut obj = 0.0;
                for i in 0..d {
                    obj -= 2.0 * x[i] * xty[i];
                    for j in 0..d {
                        obj += x[i] * xtx[(i, j)] * x[j];
                    }
                }
                if best.as_ref().map_or(true, |(b, _)| obj < *b - 0.0) {
                    best = Some((obj, x));
                }
            }
            let (_, oracle) = best.expect("at least the zero pattern is feasible");
            for k in 0..d {
                assert!(
                    (got[k] - oracle[k]).abs() <= 1e-7 * oracle[k].abs().max(1.0),
                    "case {case} coordinate {k}: nnls {} vs oracle {}",
                    got[k],
                    oracle[k]
                );
            }
        }
    }

    #[test]
    fn restricted_ols_zeroes_requested_lag() {
        let model = sample_model(5, 300, 2);
        let full = model.ols_nonnegative().unwrap();
        let restricted = model.ols_nonnegative_fixed_zero(&[2]).unwrap();
        assert_eq!(restricted[2], 0.0);
        assert!(restricted[0] >= OMEGA_FLOOR);
        assert!(full.dim() == 3);
    }

    #[test]
    fn qmle_score_small_at_optimum() {
        let model = sample_model(23, 500, 2);
        let start = model.ols_nonnegative().unwrap();
        let fit = model.fit_qmle(&start, &MaximizeOpts::default()).unwrap();
        assert!(fit.converged);
        let s = model.score(&fit.point).unwrap();
        // interior coordinates have (near) zero score
        for i in 0..3 {
            if !fit.active_set.contains(&i) {
                assert!(s[i].abs() < 1e-5, "score {} at free coordinate {i}", s[i]);
            }
        }
    }
}

//! Gaussian likelihood for the balanced two-way error components panel model
//! y_it = x_it' beta + e_i + f_t + v_it with independent normal effects.
//!
//! The NT x NT covariance has four distinct eigenvalues whose eigenspaces are
//! spanned by within/between transformations, so the likelihood reduces to
//! group means and four quadratic forms; no NT-dimensional linear algebra is
//! needed. A dense reference implementation is kept for validation.

use super::{opg_from_contributions, InfoMode};
use crate::error::{Error, Result};
use crate::inference::CriterionEvaluation;
use crate::numeric::{spd_solve_vec, Matrix, SymMatrix, Vector};
use crate::optimize::{maximize_box, maximize_fixed, Bounds, FitResult, MaximizeOpts};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floor on the idiosyncratic variance during fits.
pub const SIGMA2_V_FLOOR: f64 = 1e-10;

/// Relative step for the finite-difference Hessian of the analytic score.
pub const SCORE_FD_STEP: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct EcParams {
    pub beta: Vec<f64>,
    pub sigma2_v: f64,
    pub sigma2_individual: f64,
    pub sigma2_time: f64,
}

impl EcParams {
    pub fn new(beta: Vec<f64>, sigma2_v: f64, sigma2_individual: f64, sigma2_time: f64) -> Result<Self> {
        if !(sigma2_v > 0.0) {
            return Err(Error::NonPositiveIdiosyncraticVariance(sigma2_v));
        }
        if sigma2_individual < 0.0 || sigma2_time < 0.0 {
            return Err(Error::ConfigInvalid("effect variances must be nonnegative".into()));
        }
        Ok(EcParams { beta, sigma2_v, sigma2_individual, sigma2_time })
    }

    pub fn to_vector(&self) -> Vector {
        let mut v = self.beta.clone();
        v.extend_from_slice(&[self.sigma2_v, self.sigma2_individual, self.sigma2_time]);
        Vector::from(v)
    }
}

/// A balanced panel, individual-major: observation (i, t) sits at i * T + t.
/// The first covariate column is the intercept.
#[derive(Debug, Clone)]
pub struct PanelData {
    pub n_individuals: usize,
    pub n_periods: usize,
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

impl PanelData {
    pub fn new(n_individuals: usize, n_periods: usize, y: Vec<f64>, x: Vec<Vec<f64>>) -> Result<Self> {
        let nt = n_individuals * n_periods;
        if n_individuals < 2 || n_periods < 2 {
            return Err(Error::UnbalancedPanel(
                "need at least two individuals and two periods".into(),
            ));
        }
        if y.len() != nt || x.len() != nt {
            return Err(Error::UnbalancedPanel(format!(
                "expected {} observations, got y: {}, x: {}",
                nt,
                y.len(),
                x.len()
            )));
        }
        let k = x[0].len();
        if k == 0 || x.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("ragged covariate rows".into()));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEvaluation("panel entry".into()));
        }
        Ok(PanelData { n_individuals, n_periods, y, x })
    }

    pub fn n_covariates(&self) -> usize {
        self.x[0].len()
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }
}

/// Simulates a balanced two-way panel at the given parameters.
pub fn ec_simulate(
    params: &EcParams,
    x: Vec<Vec<f64>>,
    n_individuals: usize,
    n_periods: usize,
    rng: &mut impl Rng,
) -> Result<PanelData> {
    let nt = n_individuals * n_periods;
    if x.len() != nt {
        return Err(Error::UnbalancedPanel("covariate rows vs N*T".into()));
    }
    let e: Vec<f64> = (0..n_individuals)
        .map(|_| params.sigma2_individual.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let f: Vec<f64> = (0..n_periods)
        .map(|_| params.sigma2_time.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut y = Vec::with_capacity(nt);
    for i in 0..n_individuals {
        for t in 0..n_periods {
            let row = &x[i * n_periods + t];
            if row.len() != params.beta.len() {
                return Err(Error::DimensionMismatch("covariate row width vs beta".into()));
            }
            let xb: f64 = row.iter().zip(&params.beta).map(|(a, b)| a * b).sum();
            let v: f64 = params.sigma2_v.sqrt() * rng.sample::<f64, _>(StandardNormal);
            y.push(xb + e[i] + f[t] + v);
        }
    }
    PanelData::new(n_individuals, n_periods, y, x)
}

/// Eigenvalues and multiplicities of the error covariance, in the fixed order
/// (within, between-individual, between-period, overall mean).
fn spectrum(n: usize, t: usize, s2v: f64, s2e: f64, s2f: f64) -> ([f64; 4], [f64; 4]) {
    let lambdas = [
        s2v,
        s2v + t as f64 * s2e,
        s2v + n as f64 * s2f,
        s2v + t as f64 * s2e + n as f64 * s2f,
    ];
    let dims = [
        ((n - 1) * (t - 1)) as f64,
        (n - 1) as f64,
        (t - 1) as f64,
        1.0,
    ];
    (lambdas, dims)
}

/// Derivatives of each eigenvalue with respect to
/// (sigma2_v, sigma2_individual, sigma2_time).
fn spectrum_derivatives(n: usize, t: usize) -> [[f64; 4]; 3] {
    [
        [1.0, 1.0, 1.0, 1.0],
        [0.0, t as f64, 0.0, t as f64],
        [0.0, 0.0, n as f64, n as f64],
    ]
}

struct GroupMeans {
    individual: Vec<f64>,
    period: Vec<f64>,
    overall: f64,
}

pub struct EcModel {
    data: PanelData,
}

impl EcModel {
    pub fn new(data: PanelData) -> Self {
        EcModel { data }
    }

    pub fn data(&self) -> &PanelData {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.n_covariates() + 3
    }

    pub fn n(&self) -> usize {
        self.data.n_obs()
    }

    fn k(&self) -> usize {
        self.data.n_covariates()
    }

    fn residuals(&self, theta: &Vector) -> Vec<f64> {
        let k = self.k();
        self.data
            .y
            .iter()
            .zip(&self.data.x)
            .map(|(&y, x)| y - x.iter().enumerate().map(|(j, &v)| v * theta[j]).take(k).sum::<f64>())
            .collect()
    }

    fn group_means(&self, u: &[f64]) -> GroupMeans {
        let (n, t) = (self.data.n_individuals, self.data.n_periods);
        let mut individual = vec![0.0; n];
        let mut period = vec![0.0; t];
        for i in 0..n {
            for s in 0..t {
                let v = u[i * t + s];
                individual[i] += v;
                period[s] += v;
            }
        }
        let overall = individual.iter().sum::<f64>() / (n * t) as f64;
        for m in &mut individual {
            *m /= t as f64;
        }
        for m in &mut period {
            *m /= n as f64;
        }
        GroupMeans { individual, period, overall }
    }

    /// Projections (M_k u)_it of the residual onto the four eigenspaces, in
    /// spectrum order, evaluated at observation (i, t).
    fn projections(u: f64, gm: &GroupMeans, i: usize, t: usize) -> [f64; 4] {
        let mi = gm.individual[i];
        let mt = gm.period[t];
        let mo = gm.overall;
        [u - mi - mt + mo, mi - mo, mt - mo, mo]
    }

    fn variance_components(&self, theta: &Vector) -> (f64, f64, f64) {
        let k = self.k();
        (theta[k], theta[k + 1], theta[k + 2])
    }

    /// Average log-likelihood via the spectral decomposition; -inf when any
    /// eigenvalue of the covariance is nonpositive.
    pub fn loglik(&self, theta: &Vector) -> f64 {
        if theta.dim() != self.dim() {
            return f64::NEG_INFINITY;
        }
        let (n, t) = (self.data.n_individuals, self.data.n_periods);
        let (s2v, s2e, s2f) = self.variance_components(theta);
        let (lambdas, dims) = spectrum(n, t, s2v, s2e, s2f);
        if lambdas.iter().any(|&l| !(l > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let u = self.residuals(theta);
        let gm = self.group_means(&u);
        let mut quad = [0.0f64; 4];
        for i in 0..n {
            for s in 0..t {
                let p = Self::projections(u[i * t + s], &gm, i, s);
                for kk in 0..4 {
                    quad[kk] += u[i * t + s] * p[kk];
                }
            }
        }
        let nt = (n * t) as f64;
        let mut total = nt * LN_2PI;
        for kk in 0..4 {
            total += dims[kk] * lambdas[kk].ln() + quad[kk] / lambdas[kk];
        }
        -0.5 * total / nt
    }

    /// Dense reference likelihood: builds the full NT x NT covariance and uses
    /// a Cholesky factorization. Quadratic in memory; for validation only.
    pub fn loglik_dense(&self, theta: &Vector) -> Result<f64> {
        let (n, t) = (self.data.n_individuals, self.data.n_periods);
        let nt = n * t;
        let (s2v, s2e, s2f) = self.variance_components(theta);
        let omega = SymMatrix::from_fn(nt, |a, b| {
            let (ia, ta) = (a / t, a % t);
            let (ib, tb) = (b / t, b % t);
            let mut c = 0.0;
            if a == b {
                c += s2v;
            }
            if ia == ib {
                c += s2e;
            }
            if ta == tb {
                c += s2f;
            }
            c
        })?;
        let chol = omega.cholesky()?;
        let u = Vector::from(self.residuals(theta));
        let quad = u.dot(&chol.solve_vec(&u));
        Ok(-0.5 * (nt as f64 * LN_2PI + chol.log_det() + quad) / nt as f64)
    }

    /// Analytic average score. The beta block is X' Omega^{-1} u / NT; each
    /// variance component differentiates the eigenvalues.
    pub fn score(&self, theta: &Vector) -> Result<Vector> {
        Ok(self.score_contributions(theta)?.1)
    }

    /// Per-individual contributions to the average score (summing to the
    /// score), used for the clustered information estimate.
    fn score_contributions(&self, theta: &Vector) -> Result<(Vec<Vector>, Vector)> {
        let (n, t) = (self.data.n_individuals, self.data.n_periods);
        let k = self.k();
        let d = self.dim();
        let (s2v, s2e, s2f) = self.variance_components(theta);
        let (lambdas, dims) = spectrum(n, t, s2v, s2e, s2f);
        if lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NonPositiveIdiosyncraticVariance(lambdas[0]));
        }
        let derivs = spectrum_derivatives(n, t);
        let u = self.residuals(theta);
        let gm = self.group_means(&u);
        let nt = (n * t) as f64;

        // constant part of each variance score, split evenly across clusters
        let mut const_part = [0.0f64; 3];
        for j in 0..3 {
            for kk in 0..4 {
                const_part[j] += dims[kk] * derivs[j][kk] / lambdas[kk];
            }
        }

        let mut contributions = Vec::with_capacity(n);
        let mut score = vec![0.0; d];
        for i in 0..n {
            let mut g = vec![0.0; d];
            let mut quad_i = [0.0f64; 4];
            for s in 0..t {
                let uit = u[i * t + s];
                let p = Self::projections(uit, &gm, i, s);
                // (Omega^{-1} u)_it = sum_k p_k / lambda_k
                let omu: f64 = (0..4).map(|kk| p[kk] / lambdas[kk]).sum();
                for j in 0..k {
                    g[j] += self.data.x[i * t + s][j] * omu / nt;
                }
                for kk in 0..4 {
                    quad_i[kk] += uit * p[kk];
                }
            }
            for j in 0..3 {
                let mut quad_part = 0.0;
                for kk in 0..4 {
                    quad_part += quad_i[kk] * derivs[j][kk] / (lambdas[kk] * lambdas[kk]);
                }
                g[k + j] = -0.5 * (const_part[j] / n as f64 - quad_part) / nt;
            }
            for j in 0..d {
                score[j] += g[j];
            }
            contributions.push(Vector::from(g));
        }
        Ok((contributions, Vector::from(score)))
    }

    /// Full criterion evaluation: analytic score, negative Hessian by central
    /// finite differences of the analytic score, information by clustered
    /// outer products over individuals (or the Hessian).
    pub fn evaluate(&self, theta: &Vector, info: InfoMode) -> Result<CriterionEvaluation> {
        let d = self.dim();
        let value = self.loglik(theta);
        if !value.is_finite() {
            return Err(Error::NonFiniteEvaluation("error components likelihood".into()));
        }
        let (contributions, score) = self.score_contributions(theta)?;

        // Jacobian of the score, symmetrized before negation
        let mut jac = Matrix::zeros(d, d);
        for j in 0..d {
            let h = SCORE_FD_STEP * theta[j].abs().max(1.0);
            let mut up = theta.clone();
            up[j] += h;
            let mut dn = theta.clone();
            dn[j] -= h;
            let su = self.score(&up)?;
            let sd = self.score(&dn)?;
            for i in 0..d {
                jac[(i, j)] = (su[i] - sd[i]) / (2.0 * h);
            }
        }
        let hessian = SymMatrix::new(Matrix::from_fn(d, d, |i, j| {
            -0.5 * (jac[(i, j)] + jac[(j, i)])
        }))?;
        let info = opg_from_contributions(&contributions, self.n(), &score, info, &hessian)?;
        CriterionEvaluation::new(theta.clone(), value, score, hessian, info, self.n())
    }

    /// Box constraints: beta free, idiosyncratic variance floored, effect
    /// variances nonnegative (their null boundary).
    pub fn bounds(&self) -> Bounds {
        let k = self.k();
        let mut lower = vec![f64::NEG_INFINITY; k];
        lower.extend_from_slice(&[SIGMA2_V_FLOOR, 0.0, 0.0]);
        Bounds::new(lower, vec![f64::INFINITY; k + 3]).expect("valid panel bounds")
    }

    /// Starting values: OLS for beta, residual variance decomposition for the
    /// components.
    pub fn starting_values(&self) -> Result<Vector> {
        let (n, t) = (self.data.n_individuals, self.data.n_periods);
        let k = self.k();
        let mut xtx = Matrix::zeros(k, k);
        let mut xty = Vector::zeros(k);
        for (x, &y) in self.data.x.iter().zip(&self.data.y) {
            for a in 0..k {
                xty[a] += x[a] * y;
                for b in 0..k {
                    xtx[(a, b)] += x[a] * x[b];
                }
            }
        }
        let beta = spd_solve_vec(&SymMatrix::new(xtx)?, &xty).map_err(|_| Error::SingularDesign)?;
        let mut theta = beta.into_vec();
        theta.extend_from_slice(&[1.0, 0.0, 0.0]);
        let u = self.residuals(&Vector::from(theta.clone()));
        let gm = self.group_means(&u);
        let mut quad = [0.0f64; 4];
        for i in 0..n {
            for s in 0..t {
                let p = Self::projections(u[i * t + s], &gm, i, s);
                for kk in 0..4 {
                    quad[kk] += u[i * t + s] * p[kk];
                }
            }
        }
        let s2v = (quad[0] / (((n - 1) * (t - 1)) as f64)).max(SIGMA2_V_FLOOR * 10.0);
        let s2e = ((quad[1] / (n - 1) as f64 - s2v) / t as f64).max(0.0);
        let s2f = ((quad[2] / (t - 1) as f64 - s2v) / n as f64).max(0.0);
        theta[k] = s2v;
        theta[k + 1] = s2e;
        theta[k + 2] = s2f;
        Ok(Vector::from(theta))
    }

    /// Unrestricted maximum likelihood fit.
    pub fn fit(&self, opts: &MaximizeOpts) -> Result<FitResult> {
        let start = self.starting_values()?;
        let bounds = self.bounds();
        let f = |t: &Vector| self.loglik(t);
        let g = |t: &Vector| self.score(t);
        maximize_box(&f, Some(&g), &bounds.project(&start), &bounds, opts)
    }

    /// Maximum likelihood with the listed coordinates pinned.
    pub fn fit_fixed(&self, fixed: &[(usize, f64)], opts: &MaximizeOpts) -> Result<FitResult> {
        let start = self.starting_values()?;
        let bounds = self.bounds();
        let f = |t: &Vector| self.loglik(t);
        let g = |t: &Vector| self.score(t);
        maximize_fixed(&f, Some(&g), &bounds.project(&start), &bounds, fixed, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::fd_gradient;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_model(seed: u64, n: usize, t: usize) -> EcModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = EcParams::new(vec![1.0, 0.5], 1.0, 0.4, 0.2).unwrap();
        let x: Vec<Vec<f64>> = (0..n * t).map(|_| vec![1.0, rng.gen_range(-1.0..1.0)]).collect();
        EcModel::new(ec_simulate(&params, x, n, t, &mut rng).unwrap())
    }

    #[test]
    fn spectral_matches_dense() {
        for seed in 0..5u64 {
            let model = sample_model(seed, 4, 3);
            let theta = Vector::from(vec![0.9, 0.6, 1.1, 0.3, 0.25]);
            let fast = model.loglik(&theta);
            let dense = model.loglik_dense(&theta).unwrap();
            assert!(
                (fast - dense).abs() <= 1e-9 * dense.abs().max(1.0),
                "seed {seed}: spectral {fast} vs dense {dense}"
            );
        }
    }

    #[test]
    fn spectral_matches_dense_on_boundary() {
        let model = sample_model(9, 3, 4);
        // zero time-effect variance: lambda_3 = lambda_1
        let theta = Vector::from(vec![1.0, 0.4, 0.8, 0.5, 0.0]);
        let fast = model.loglik(&theta);
        let dense = model.loglik_dense(&theta).unwrap();
        assert!((fast - dense).abs() <= 1e-9 * dense.abs().max(1.0));
    }

    #[test]
    fn score_matches_finite_differences() {
        let model = sample_model(3, 5, 4);
        for theta in [
            Vector::from(vec![1.0, 0.5, 1.0, 0.4, 0.2]),
            Vector::from(vec![0.8, 0.7, 1.3, 0.1, 0.05]),
        ] {
            let analytic = model.score(&theta).unwrap();
            let fd = fd_gradient(|t| model.loglik(t), &theta, 1e-5).unwrap();
            assert!(
                analytic.sub(&fd).norm_inf() <= 1e-5 * analytic.norm_inf().max(1.0),
                "score mismatch at {:?}: {:?} vs {:?}",
                theta,
                analytic,
                fd
            );
        }
    }

    #[test]
    fn score_contributions_sum_to_score() {
        let model = sample_model(5, 6, 3);
        let theta = Vector::from(vec![1.1, 0.4, 0.9, 0.3, 0.1]);
        let (contributions, score) = model.score_contributions(&theta).unwrap();
        let mut total = Vector::zeros(model.dim());
        for g in &contributions {
            total = total.add(g);
        }
        assert!(total.sub(&score).norm_inf() < 1e-14);
        assert_eq!(contributions.len(), 6);
    }

    #[test]
    fn hessian_close_to_value_based_hessian() {
        let model = sample_model(7, 5, 4);
        let theta = Vector::from(vec![1.0, 0.5, 1.0, 0.4, 0.2]);
        let e = model.evaluate(&theta, InfoMode::Opg).unwrap();
        let h = crate::numeric::fd_hessian(|t| model.loglik(t), &theta, 1e-4).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!(
                    (e.hessian[(i, j)] + h[(i, j)]).abs() <= 1e-4 * e.hessian.as_matrix().max_abs(),
                    "hessian mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn fit_recovers_truth_roughly() {
        let model = sample_model(11, 60, 8);
        let fit = model.fit(&MaximizeOpts::default()).unwrap();
        assert!(fit.converged);
        let truth = [1.0, 0.5, 1.0, 0.4, 0.2];
        for (i, &tv) in truth.iter().enumerate() {
            assert!(
                (fit.point[i] - tv).abs() < 0.5,
                "coordinate {i}: {} vs {}",
                fit.point[i],
                tv
            );
        }
    }

    #[test]
    fn rejects_unbalanced_shapes() {
        let y = vec![0.0; 5];
        let x = vec![vec![1.0]; 5];
        assert!(matches!(PanelData::new(2, 3, y, x), Err(Error::UnbalancedPanel(_))));
    }
}

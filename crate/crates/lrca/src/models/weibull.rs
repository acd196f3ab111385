//! Weibull survival regression in the log-time parameterization. With
//! y_i = log t_i and z_i = eta y_i + x_i' beta, the average log-likelihood is
//! avg [ log eta + z_i - exp(z_i) ]; eta is the shape, beta the regression
//! coefficients (the first covariate column is the intercept).

use super::{opg_from_contributions, InfoMode};
use crate::error::{Error, Result};
use crate::inference::CriterionEvaluation;
use crate::numeric::{Matrix, SymMatrix, Vector};
use crate::optimize::{maximize_box, maximize_fixed, Bounds, FitResult, MaximizeOpts};
use rand::Rng;

/// Lower bound on the shape during unconstrained fits.
pub const ETA_FLOOR: f64 = 1e-8;

/// digamma(1) = -Euler-Mascheroni, the mean of the standard Gumbel error.
pub const DIGAMMA_ONE: f64 = -0.577_215_664_901_532_9;

/// Sign convention for the closed-form moment estimator of the shape. The two
/// published forms of the estimator differ in the sign of the digamma term;
/// only `MeanAdjusted` is consistent for the model simulated here, the other
/// is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentEtaConvention {
    /// eta = -(sum_i x_i' beta + n digamma(1)) / sum_i log t_i  with the
    /// digamma term added; consistent under the data generating process.
    MeanAdjusted,
    /// Same expression with the digamma term subtracted.
    Verbatim,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeibullParams {
    pub beta: Vec<f64>,
    pub eta: f64,
}

impl WeibullParams {
    pub fn new(beta: Vec<f64>, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::NonPositiveShape(eta));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFiniteEvaluation("regression coefficient".into()));
        }
        Ok(WeibullParams { beta, eta })
    }

    pub fn to_vector(&self) -> Vector {
        let mut v = self.beta.clone();
        v.push(self.eta);
        Vector::from(v)
    }

    pub fn from_vector(theta: &Vector) -> Result<Self> {
        let d = theta.dim();
        WeibullParams::new(theta.as_slice()[..d - 1].to_vec(), theta[d - 1])
    }
}

/// Simulates event times: log t_i = (-x_i' beta + u_i) / eta with u_i a
/// standard Gumbel draw, u = log(-log U), U uniform.
pub fn weibull_simulate(
    params: &WeibullParams,
    covariates: &[Vec<f64>],
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let k = params.beta.len();
    if covariates.iter().any(|x| x.len() != k) {
        return Err(Error::DimensionMismatch("covariate row width vs beta".into()));
    }
    let mut times = Vec::with_capacity(covariates.len());
    for x in covariates {
        let xb: f64 = x.iter().zip(&params.beta).map(|(a, b)| a * b).sum();
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let gumbel = (-u.ln()).ln();
        times.push(((-xb + gumbel) / params.eta).exp());
    }
    Ok(times)
}

/// Weibull regression criterion over observed times and covariates. The
/// parameter vector is (beta_0, ..., beta_{k-1}, eta).
pub struct WeibullModel {
    x: Vec<Vec<f64>>,
    logt: Vec<f64>,
    k: usize,
}

impl WeibullModel {
    pub fn new(covariates: Vec<Vec<f64>>, times: &[f64]) -> Result<Self> {
        if covariates.len() != times.len() {
            return Err(Error::SampleSizeMismatch(covariates.len(), times.len()));
        }
        if covariates.is_empty() {
            return Err(Error::Data("empty sample".into()));
        }
        let k = covariates[0].len();
        if k == 0 || covariates.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("ragged covariate rows".into()));
        }
        if covariates.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEvaluation("covariate entry".into()));
        }
        let mut logt = Vec::with_capacity(times.len());
        for &t in times {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::NonPositiveTime(t));
            }
            logt.push(t.ln());
        }
        Ok(WeibullModel { x: covariates, logt, k })
    }

    pub fn n(&self) -> usize {
        self.logt.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k + 1
    }

    fn linear_index(&self, theta: &Vector, i: usize) -> f64 {
        let eta = theta[self.k];
        let xb: f64 = self.x[i].iter().enumerate().map(|(j, &v)| v * theta[j]).sum();
        eta * self.logt[i] + xb
    }

    /// Average log-likelihood, -inf for nonpositive shape.
    pub fn loglik(&self, theta: &Vector) -> f64 {
        if theta.dim() != self.dim() {
            return f64::NEG_INFINITY;
        }
        let eta = theta[self.k];
        if !(eta > 0.0) {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for i in 0..self.n() {
            let z = self.linear_index(theta, i);
            total += eta.ln() + z - z.exp();
        }
        if !total.is_finite() {
            return f64::NEG_INFINITY;
        }
        total / self.n() as f64
    }

    /// Analytic average score: beta block avg x_i (1 - e^{z_i}), shape
    /// component avg [ 1/eta + y_i (1 - e^{z_i}) ].
    pub fn score(&self, theta: &Vector) -> Result<Vector> {
        let eta = theta[self.k];
        if !(eta > 0.0) {
            return Err(Error::NonPositiveShape(eta));
        }
        let n = self.n();
        let d = self.dim();
        let mut s = vec![0.0; d];
        for i in 0..n {
            let z = self.linear_index(theta, i);
            let w = 1.0 - z.exp();
            for j in 0..self.k {
                s[j] += self.x[i][j] * w;
            }
            s[self.k] += 1.0 / eta + self.logt[i] * w;
        }
        Ok(Vector::from(s.into_iter().map(|v| v / n as f64).collect::<Vec<_>>()))
    }

    /// Full criterion evaluation with analytic negative Hessian:
    /// beta-beta block avg e^z x x', beta-eta avg e^z y x, eta-eta
    /// avg [ 1/eta^2 + y^2 e^z ].
    pub fn evaluate(&self, theta: &Vector, info: InfoMode) -> Result<CriterionEvaluation> {
        let eta = theta[self.k];
        if !(eta > 0.0) {
            return Err(Error::NonPositiveShape(eta));
        }
        let n = self.n();
        let d = self.dim();
        let mut value = 0.0;
        let mut score = vec![0.0; d];
        let mut hess = Matrix::zeros(d, d);
        let mut contributions = Vec::with_capacity(n);
        for i in 0..n {
            let y = self.logt[i];
            let z = self.linear_index(theta, i);
            let ez = z.exp();
            if !ez.is_finite() {
                return Err(Error::NonFiniteEvaluation("exponentiated linear index".into()));
            }
            value += eta.ln() + z - ez;
            let w = 1.0 - ez;
            let mut g = vec![0.0; d];
            for j in 0..self.k {
                g[j] = self.x[i][j] * w / n as f64;
                score[j] += self.x[i][j] * w;
                for l in 0..self.k {
                    hess[(j, l)] += ez * self.x[i][j] * self.x[i][l];
                }
                let cross = ez * y * self.x[i][j];
                hess[(j, self.k)] += cross;
                hess[(self.k, j)] += cross;
            }
            g[self.k] = (1.0 / eta + y * w) / n as f64;
            score[self.k] += 1.0 / eta + y * w;
            hess[(self.k, self.k)] += 1.0 / (eta * eta) + y * y * ez;
            contributions.push(Vector::from(g));
        }
        let score = Vector::from(score.into_iter().map(|v| v / n as f64).collect::<Vec<_>>());
        let hessian = SymMatrix::new(hess.scale(1.0 / n as f64))?;
        let info = opg_from_contributions(&contributions, n, &score, info, &hessian)?;
        CriterionEvaluation::new(theta.clone(), value / n as f64, score, hessian, info, n)
    }

    /// Box constraints: beta free, eta bounded below.
    pub fn bounds(&self, eta_lower: f64) -> Bounds {
        let d = self.dim();
        let mut lower = vec![f64::NEG_INFINITY; d];
        let mut upper = vec![f64::INFINITY; d];
        lower[self.k] = eta_lower;
        upper[self.k] = f64::INFINITY;
        Bounds::new(lower, upper).expect("valid Weibull bounds")
    }

    /// Unrestricted maximum likelihood with the shape bounded below by
    /// `eta_lower` (use `ETA_FLOOR` for an effectively open parameter space).
    pub fn fit_mle(&self, start: &Vector, eta_lower: f64, opts: &MaximizeOpts) -> Result<FitResult> {
        let bounds = self.bounds(eta_lower);
        let f = |t: &Vector| self.loglik(t);
        let g = |t: &Vector| self.score(t);
        maximize_box(&f, Some(&g), &bounds.project(start), &bounds, opts)
    }

    /// Restricted maximum likelihood with the listed coordinates pinned.
    pub fn fit_mle_fixed(
        &self,
        start: &Vector,
        eta_lower: f64,
        fixed: &[(usize, f64)],
        opts: &MaximizeOpts,
    ) -> Result<FitResult> {
        let bounds = self.bounds(eta_lower);
        let f = |t: &Vector| self.loglik(t);
        let g = |t: &Vector| self.score(t);
        maximize_fixed(&f, Some(&g), &bounds.project(start), &bounds, fixed, opts)
    }

    /// Closed-form moment estimator of the shape with beta held at its null
    /// value: eta = (-sum_i x_i' beta + c * n * digamma(1)) / sum_i log t_i,
    /// with c = +1 under `MeanAdjusted` and c = -1 under `Verbatim`.
    pub fn moment_eta(&self, beta: &[f64], convention: MomentEtaConvention) -> Result<f64> {
        if beta.len() != self.k {
            return Err(Error::DimensionMismatch("beta vs covariates".into()));
        }
        let n = self.n() as f64;
        let sum_logt: f64 = self.logt.iter().sum();
        if sum_logt.abs() < 1e-12 {
            return Err(Error::DegenerateDenominator);
        }
        let sum_xb: f64 = self
            .x
            .iter()
            .map(|x| x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        let sign = match convention {
            MomentEtaConvention::MeanAdjusted => 1.0,
            MomentEtaConvention::Verbatim => -1.0,
        };
        let eta = (-sum_xb + sign * n * DIGAMMA_ONE) / sum_logt;
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::NonPositiveShape(eta));
        }
        Ok(eta)
    }

    /// Cheap starting point from least squares on log durations. With
    /// y = -x'beta/eta + u/eta and u standard Gumbel of minima
    /// (mean digamma(1), variance pi^2/6), the slope coefficients identify
    /// -beta/eta, the residual variance identifies eta, and the intercept
    /// absorbs the error mean. Column 0 of the design must be the intercept.
    pub fn ls_start(&self) -> Result<Vector> {
        let k = self.k;
        let xtx = SymMatrix::new(Matrix::from_fn(k, k, |a, b| {
            self.x.iter().map(|row| row[a] * row[b]).sum()
        }))?;
        let xty = Vector::from(
            (0..k)
                .map(|a| self.x.iter().zip(&self.logt).map(|(row, y)| row[a] * y).sum())
                .collect::<Vec<f64>>(),
        );
        let coef = crate::numeric::spd_solve_vec(&xtx, &xty)?;
        let n = self.n() as f64;
        let ssr: f64 = self
            .x
            .iter()
            .zip(&self.logt)
            .map(|(row, y)| {
                let fit: f64 = row.iter().zip(coef.as_slice()).map(|(a, b)| a * b).sum();
                (y - fit) * (y - fit)
            })
            .sum();
        let resid_var = ssr / n;
        if !(resid_var > 0.0) {
            return Err(Error::DegenerateDenominator);
        }
        let eta = (std::f64::consts::PI * std::f64::consts::PI / (6.0 * resid_var)).sqrt();
        let mut beta: Vec<f64> = coef.as_slice().iter().map(|a| -eta * a).collect();
        beta[0] += DIGAMMA_ONE;
        beta.push(eta.max(ETA_FLOOR));
        Ok(Vector::from(beta))
    }
}

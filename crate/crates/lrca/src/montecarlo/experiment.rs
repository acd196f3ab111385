//! Experiment configuration and the replication engine.

use super::output::{CalibrationSummary, PowerCurve, RejectionRow, RejectionTable, TestCalibration};
use super::seeding::{replication_rng, COVARIATE_STREAM};
use crate::error::{Error, Result};
use crate::inference::{c_alpha, classic_lm, classic_lr, lrc_alpha, wald};
use crate::inference::{CriterionEvaluation, Restriction};
use crate::models::arch::{arch_simulate, ArchModel, ArchParams};
use crate::models::weibull::{weibull_simulate, WeibullModel, WeibullParams, ETA_FLOOR};
use crate::models::{InfoMode, MomentEtaConvention};
use crate::numeric::{chi2_cdf, chi2_quantile, SymMatrix, Vector};
use crate::optimize::MaximizeOpts;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which statistics a replication computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    LrcAlpha,
    CAlpha,
    Lr,
    Lm,
    Wald,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::LrcAlpha => "lrc-alpha",
            TestKind::CAlpha => "c-alpha",
            TestKind::Lr => "lr",
            TestKind::Lm => "lm",
            TestKind::Wald => "wald",
        }
    }

    pub fn all() -> Vec<TestKind> {
        vec![TestKind::LrcAlpha, TestKind::CAlpha, TestKind::Lr, TestKind::Lm, TestKind::Wald]
    }
}

/// Data generating processes known to the harness. The ARCH entries test the
/// highest-order lag coefficient against zero; the Weibull entries test the
/// two regression coefficients jointly; the synthetic boundary entry is an
/// exactly quadratic Gaussian criterion with a nonnegative nuisance whose true
/// value sits on the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgpId {
    Dgp1,
    Dgp2,
    Dgp3,
    Dgp4,
    Dgp5,
    Dgp6,
    WeibullSize,
    WeibullPower,
    SyntheticBoundary,
}

impl DgpId {
    pub fn name(self) -> &'static str {
        match self {
            DgpId::Dgp1 => "dgp1",
            DgpId::Dgp2 => "dgp2",
            DgpId::Dgp3 => "dgp3",
            DgpId::Dgp4 => "dgp4",
            DgpId::Dgp5 => "dgp5",
            DgpId::Dgp6 => "dgp6",
            DgpId::WeibullSize => "weibull-size",
            DgpId::WeibullPower => "weibull-power",
            DgpId::SyntheticBoundary => "synthetic-boundary",
        }
    }
}

/// How the restricted estimate is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictedEstimator {
    /// Restricted extremum fit of the criterion itself (restricted QMLE/MLE).
    Extremum,
    /// Closed-form auxiliary estimator: sign-constrained least squares for
    /// ARCH, the moment shape estimator for Weibull.
    Auxiliary,
}

impl Default for RestrictedEstimator {
    fn default() -> Self {
        RestrictedEstimator::Extremum
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeibullOptions {
    /// True shape.
    #[serde(default = "one")]
    pub eta: f64,
    /// Impose eta >= 1 in the restricted fit (the boundary variant).
    #[serde(default)]
    pub impose_eta_ge_1: bool,
    /// Sign convention for the auxiliary shape estimator.
    #[serde(default = "mean_adjusted")]
    pub moment_convention: MomentEtaConvention,
}

fn one() -> f64 {
    1.0
}

fn mean_adjusted() -> MomentEtaConvention {
    MomentEtaConvention::MeanAdjusted
}

impl Default for WeibullOptions {
    fn default() -> Self {
        WeibullOptions { eta: 1.0, impose_eta_ge_1: false, moment_convention: mean_adjusted() }
    }
}

fn default_levels() -> Vec<f64> {
    vec![0.05, 0.10]
}

fn default_tests() -> Vec<TestKind> {
    vec![TestKind::LrcAlpha, TestKind::CAlpha]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dgp: DgpId,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_tests")]
    pub tests: Vec<TestKind>,
    #[serde(default)]
    pub info: InfoMode,
    #[serde(default)]
    pub restricted_estimator: RestrictedEstimator,
    #[serde(default)]
    pub weibull: WeibullOptions,
    /// Correlation of the synthetic boundary model's two components.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Worker pool cap; default uses all cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Re-derive every replication's score-type statistic from the restricted
    /// evaluation through the full adjusted-criterion path and require
    /// agreement to 1e-9 (slow; debugging aid).
    #[serde(default)]
    pub debug_identity_check: bool,
}

fn default_rho() -> f64 {
    0.7
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::ConfigInvalid("replications must be at least 1".into()));
        }
        if self.n < 10 {
            return Err(Error::ConfigInvalid("sample size too small".into()));
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(0.0 < *l && *l < 1.0)) {
            return Err(Error::ConfigInvalid("levels must lie in (0, 1)".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::ConfigInvalid("no tests requested".into()));
        }
        if !(-1.0 < self.rho && self.rho < 1.0) {
            return Err(Error::ConfigInvalid("rho must lie in (-1, 1)".into()));
        }
        if !(self.weibull.eta > 0.0) {
            return Err(Error::ConfigInvalid("true shape must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One statistic value drawn in one replication.
#[derive(Debug, Clone, Copy)]
pub struct StatDraw {
    pub test: TestKind,
    pub statistic: f64,
    pub df: usize,
}

/// All statistic draws of an experiment, in replication order; `None` marks a
/// replication whose fits failed.
#[derive(Debug, Clone)]
pub struct ExperimentDraws {
    pub dgp: DgpId,
    pub n: usize,
    pub replications: usize,
    pub draws: Vec<Option<Vec<StatDraw>>>,
}

impl ExperimentDraws {
    pub fn failures(&self) -> usize {
        self.draws.iter().filter(|d| d.is_none()).count()
    }

    fn stats_for(&self, test: TestKind) -> (Vec<f64>, usize) {
        let mut out = Vec::new();
        let mut df = 1;
        for d in self.draws.iter().flatten() {
            if let Some(s) = d.iter().find(|s| s.test == test) {
                out.push(s.statistic);
                df = s.df;
            }
        }
        (out, df)
    }

    /// Rejection rates at the given nominal levels.
    pub fn rejection_table(&self, tests: &[TestKind], levels: &[f64]) -> Result<RejectionTable> {
        let mut rows = Vec::new();
        for &test in tests {
            let (stats, df) = self.stats_for(test);
            if stats.is_empty() {
                return Err(Error::ConfigInvalid(format!("no draws for test {}", test.name())));
            }
            for &level in levels {
                let crit = chi2_quantile(df, 1.0 - level)?;
                let hits = stats.iter().filter(|&&s| s >= crit).count();
                rows.push(RejectionRow {
                    dgp: self.dgp.name().to_string(),
                    n: self.n,
                    test: test.name().to_string(),
                    level,
                    rate: hits as f64 / stats.len() as f64,
                });
            }
        }
        Ok(RejectionTable {
            rows,
            replications: self.replications,
            failures: self.failures(),
        })
    }

    /// Empirical quantiles and a Kolmogorov-Smirnov distance against the
    /// chi-square reference for each test.
    pub fn calibration(&self, tests: &[TestKind]) -> Result<CalibrationSummary> {
        let mut out = Vec::new();
        for &test in tests {
            let (mut stats, df) = self.stats_for(test);
            if stats.is_empty() {
                return Err(Error::ConfigInvalid(format!("no draws for test {}", test.name())));
            }
            stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let r = stats.len();
            let quantile = |p: f64| {
                let idx = ((p * r as f64).ceil() as usize).clamp(1, r) - 1;
                stats[idx]
            };
            let mut ks = 0.0f64;
            for (i, &s) in stats.iter().enumerate() {
                let f = chi2_cdf(df, s)?;
                ks = ks.max((f - i as f64 / r as f64).abs());
                ks = ks.max(((i + 1) as f64 / r as f64 - f).abs());
            }
            out.push(TestCalibration {
                test: test.name().to_string(),
                df,
                draws: r,
                q90: quantile(0.90),
                q95: quantile(0.95),
                q99: quantile(0.99),
                ks_distance: ks,
                ks_band_5pct: 1.36 / (r as f64).sqrt(),
            });
        }
        Ok(CalibrationSummary { tests: out, replications: self.replications, failures: self.failures() })
    }
}

/// Everything precomputed once per experiment and shared by replications.
enum ExperimentContext {
    Arch { truth: ArchParams, tested: usize },
    Weibull { covariates: Vec<Vec<f64>>, truth: WeibullParams, null_beta: [f64; 2] },
    Synthetic { rho: f64 },
}

fn build_context(cfg: &ExperimentConfig, null_beta0: Option<f64>) -> Result<ExperimentContext> {
    match cfg.dgp {
        DgpId::Dgp1 => Ok(ExperimentContext::Arch {
            truth: ArchParams::new(1.0, vec![0.1, 0.0])?,
            tested: 2,
        }),
        DgpId::Dgp2 => Ok(ExperimentContext::Arch {
            truth: ArchParams::new(10.0 / 9.0, vec![0.0, 0.0])?,
            tested: 2,
        }),
        DgpId::Dgp3 => Ok(ExperimentContext::Arch {
            truth: ArchParams::new(1.0, vec![0.1, 0.1, 0.1, 0.0])?,
            tested: 4,
        }),
        DgpId::Dgp4 => Ok(ExperimentContext::Arch {
            truth: ArchParams::new(1.0, vec![0.15, 0.15, 0.0, 0.0])?,
            tested: 4,
        }),
        DgpId::Dgp5 => Ok(ExperimentContext::Arch {
            truth: ArchParams::new(1.0, vec![0.3, 0.0, 0.0, 0.0])?,
            tested: 4,
        }),
        DgpId::Dgp6 => Ok(ExperimentContext::Arch {
            truth: ArchParams::new(10.0 / 7.0, vec![0.0, 0.0, 0.0, 0.0])?,
            tested: 4,
        }),
        DgpId::WeibullSize | DgpId::WeibullPower => {
            // regressor values are drawn once per (n, master seed) and held
            // fixed across replications
            let mut rng = replication_rng(cfg.master_seed, COVARIATE_STREAM);
            let covariates: Vec<Vec<f64>> =
                (0..cfg.n).map(|_| vec![1.0, rng.gen_range(0.0..1.0)]).collect();
            Ok(ExperimentContext::Weibull {
                covariates,
                truth: WeibullParams::new(vec![-5.0, 1.0], cfg.weibull.eta)?,
                null_beta: [null_beta0.unwrap_or(-5.0), 1.0],
            })
        }
        DgpId::SyntheticBoundary => Ok(ExperimentContext::Synthetic { rho: cfg.rho }),
    }
}

/// Computes the requested statistics from a pair of evaluations.
fn compute_stats(
    cfg: &ExperimentConfig,
    eval_u: &CriterionEvaluation,
    eval_r: &CriterionEvaluation,
    restriction: &Restriction,
) -> Result<Vec<StatDraw>> {
    // level only determines reject/p-value fields, which aggregation ignores
    let level = 0.05;
    let q = restriction.q();
    let mut out = Vec::with_capacity(cfg.tests.len());
    for &test in &cfg.tests {
        let outcome = match test {
            TestKind::LrcAlpha => lrc_alpha(eval_u, eval_r, restriction, level)?,
            TestKind::CAlpha => c_alpha(eval_r, restriction, level)?,
            TestKind::Lr => classic_lr(eval_u, eval_r, q, level)?,
            TestKind::Lm => classic_lm(eval_r, restriction, level)?,
            TestKind::Wald => {
                // sandwich covariance H^{-1} I H^{-1} / n at the unrestricted point
                let hinv = eval_u.hessian.cholesky()?.inverse();
                let cov = SymMatrix::new(
                    hinv.as_matrix()
                        .mul(&eval_u.info.as_matrix().mul(hinv.as_matrix()))
                        .scale(1.0 / eval_u.n as f64),
                )?;
                wald(&eval_u.point, &cov, restriction, level)?
            }
        };
        out.push(StatDraw { test, statistic: outcome.statistic, df: outcome.df });
    }
    if cfg.debug_identity_check {
        let coincident = lrc_alpha(eval_r, eval_r, restriction, level)?.statistic;
        let score_type = c_alpha(eval_r, restriction, level)?.statistic;
        if (coincident - score_type).abs() > 1e-9 * score_type.abs().max(1.0) {
            return Err(Error::ConfigInvalid(format!(
                "self-check failed: coincident-estimate statistic {coincident} vs score-type {score_type}"
            )));
        }
    }
    Ok(out)
}

fn fit_opts() -> MaximizeOpts {
    MaximizeOpts { max_iter: 300, tol: 1e-8, ..MaximizeOpts::default() }
}

fn run_arch_replication(
    cfg: &ExperimentConfig,
    truth: &ArchParams,
    tested: usize,
    index: u64,
) -> Result<Vec<StatDraw>> {
    let mut rng = replication_rng(cfg.master_seed, index);
    // Zero presample held fixed, no burn-in: the simulated process then
    // matches the estimation model's own initialization exactly.
    let series = arch_simulate(truth, cfg.n, 0, &mut rng)?;
    let model = ArchModel::new(series, truth.alpha.len())?;
    let restriction = Restriction::fix_components(&[tested], &[0.0]);
    let opts = fit_opts();

    let restricted_point = match cfg.restricted_estimator {
        RestrictedEstimator::Auxiliary => model.ols_nonnegative_fixed_zero(&[tested])?,
        RestrictedEstimator::Extremum => {
            let start = model.ols_nonnegative_fixed_zero(&[tested])?;
            let fit = model.fit_qmle_fixed(&start, &[(tested, 0.0)], &opts)?;
            if !fit.converged {
                return Err(Error::ConfigInvalid("restricted fit did not converge".into()));
            }
            fit.point
        }
    };

    let start_u = model.ols_nonnegative()?;
    let fit_u = model.fit_qmle(&start_u, &opts)?;
    if !fit_u.converged {
        return Err(Error::ConfigInvalid("unrestricted fit did not converge".into()));
    }

    let eval_u = model.evaluate(&fit_u.point, cfg.info)?;
    let eval_r = model.evaluate(&restricted_point, cfg.info)?;
    compute_stats(cfg, &eval_u, &eval_r, &restriction)
}

fn run_weibull_replication(
    cfg: &ExperimentConfig,
    covariates: &[Vec<f64>],
    truth: &WeibullParams,
    null_beta: [f64; 2],
    index: u64,
) -> Result<Vec<StatDraw>> {
    let mut rng = replication_rng(cfg.master_seed, index);
    let times = weibull_simulate(truth, covariates, &mut rng)?;
    let model = WeibullModel::new(covariates.to_vec(), &times)?;
    let restriction = Restriction::fix_components(&[0, 1], &null_beta);
    let opts = fit_opts();

    // Least-squares start keeps the unrestricted fit anchored near the data
    // even when the null point is deep in the alternative.
    let start = model
        .ls_start()
        .unwrap_or_else(|_| Vector::from(vec![null_beta[0], null_beta[1], 1.0]));
    let fit_u = model.fit_mle(&start, ETA_FLOOR, &opts)?;
    if !fit_u.converged {
        return Err(Error::ConfigInvalid("unrestricted fit did not converge".into()));
    }

    let restricted_point = match cfg.restricted_estimator {
        RestrictedEstimator::Auxiliary => {
            let eta = model.moment_eta(&null_beta, cfg.weibull.moment_convention)?;
            Vector::from(vec![null_beta[0], null_beta[1], eta])
        }
        RestrictedEstimator::Extremum => {
            let eta_lower = if cfg.weibull.impose_eta_ge_1 { 1.0 } else { ETA_FLOOR };
            let fixed = [(0, null_beta[0]), (1, null_beta[1])];
            let fit = model.fit_mle_fixed(&start, eta_lower, &fixed, &opts)?;
            if !fit.converged {
                return Err(Error::ConfigInvalid("restricted fit did not converge".into()));
            }
            fit.point
        }
    };

    let eval_u = model.evaluate(&fit_u.point, cfg.info)?;
    let eval_r = model.evaluate(&restricted_point, cfg.info)?;
    compute_stats(cfg, &eval_u, &eval_r, &restriction)
}

/// Exactly quadratic Gaussian criterion with known covariance: component 1 is
/// tested against zero, component 2 is a nonnegative nuisance whose true value
/// sits on the bound.
fn run_synthetic_replication(cfg: &ExperimentConfig, rho: f64, index: u64) -> Result<Vec<StatDraw>> {
    let mut rng = replication_rng(cfg.master_seed, index);
    let n = cfg.n;
    let (mut m1, mut m2) = (0.0f64, 0.0f64);
    let c = (1.0 - rho * rho).sqrt();
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let z1 = e1;
        let z2 = rho * e1 + c * e2;
        m1 += z1;
        m2 += z2;
        draws.push((z1, z2));
    }
    m1 /= n as f64;
    m2 /= n as f64;
    let zbar = Vector::from(vec![m1, m2]);

    // precision matrix A = Sigma^{-1}
    let det = 1.0 - rho * rho;
    let a = SymMatrix::from_fn(2, |i, j| {
        if i == j {
            1.0 / det
        } else {
            -rho / det
        }
    })?;
    // data-dependent constant of the average criterion
    let mut c0 = 0.0;
    for &(z1, z2) in &draws {
        let d = Vector::from(vec![z1 - m1, z2 - m2]);
        c0 += a.quad(&d);
    }
    let c0 = -0.5 * c0 / n as f64;

    let criterion = |theta: &Vector| -> f64 {
        let d = theta.sub(&zbar);
        c0 - 0.5 * a.quad(&d)
    };
    let evaluate = |theta: &Vector| -> Result<CriterionEvaluation> {
        let score = a.mul_vec(&zbar.sub(theta));
        CriterionEvaluation::new(theta.clone(), criterion(theta), score, a.clone(), a.clone(), n)
    };

    // closed-form constrained maximizers: the criterion is exactly quadratic
    let a11 = a[(0, 0)];
    let a12 = a[(0, 1)];
    let a22 = a[(1, 1)];
    let theta_hat = if m2 >= 0.0 {
        zbar.clone()
    } else {
        Vector::from(vec![m1 + (a12 / a11) * m2, 0.0])
    };
    let theta_tilde = {
        let t2 = m2 + (a12 / a22) * m1;
        Vector::from(vec![0.0, t2.max(0.0)])
    };

    let restriction = Restriction::fix_components(&[0], &[0.0]);
    let eval_u = evaluate(&theta_hat)?;
    let eval_r = evaluate(&theta_tilde)?;
    compute_stats(cfg, &eval_u, &eval_r, &restriction)
}

fn run_replication(cfg: &ExperimentConfig, ctx: &ExperimentContext, index: u64) -> Result<Vec<StatDraw>> {
    match ctx {
        ExperimentContext::Arch { truth, tested } => {
            run_arch_replication(cfg, truth, *tested, index)
        }
        ExperimentContext::Weibull { covariates, truth, null_beta } => {
            run_weibull_replication(cfg, covariates, truth, *null_beta, index)
        }
        ExperimentContext::Synthetic { rho } => run_synthetic_replication(cfg, *rho, index),
    }
}

fn run_draws(cfg: &ExperimentConfig, null_beta0: Option<f64>) -> Result<ExperimentDraws> {
    cfg.validate()?;
    let ctx = build_context(cfg, null_beta0)?;
    let body = || {
        (0..cfg.replications as u64)
            .into_par_iter()
            .map(|i| run_replication(cfg, &ctx, i).ok())
            .collect::<Vec<_>>()
    };
    let draws = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::ConfigInvalid(format!("worker pool: {e}")))?
            .install(body),
        None => body(),
    };
    Ok(ExperimentDraws { dgp: cfg.dgp, n: cfg.n, replications: cfg.replications, draws })
}

/// Runs a size experiment and aggregates rejection rates.
pub fn run_level_experiment(cfg: &ExperimentConfig) -> Result<RejectionTable> {
    let draws = run_draws(cfg, None)?;
    draws.rejection_table(&cfg.tests, &cfg.levels)
}

/// Runs a power experiment: data always come from the fixed truth, while the
/// null value of the first regression coefficient sweeps the grid.
pub fn run_power_experiment(cfg: &ExperimentConfig, grid: &[f64], level: f64) -> Result<PowerCurve> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::ConfigInvalid("empty power grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ConfigInvalid("power grid must be strictly increasing".into()));
    }
    if !matches!(cfg.dgp, DgpId::WeibullSize | DgpId::WeibullPower) {
        return Err(Error::ConfigInvalid("power experiments use the Weibull design".into()));
    }
    let mut rates: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    let mut failures = 0;
    for &b0 in grid {
        let draws = run_draws(cfg, Some(b0))?;
        failures += draws.failures();
        let table = draws.rejection_table(&cfg.tests, &[level])?;
        rates.push(table.rows.iter().map(|r| r.rate).collect());
    }
    Ok(PowerCurve {
        grid: grid.to_vec(),
        tests: cfg.tests.iter().map(|t| t.name().to_string()).collect(),
        rates,
        n: cfg.n,
        replications: cfg.replications,
        level,
        failures,
    })
}

/// Collects null statistic draws and summarizes their distribution.
pub fn null_calibration(cfg: &ExperimentConfig) -> Result<CalibrationSummary> {
    let draws = run_draws(cfg, None)?;
    draws.calibration(&cfg.tests)
}

/// Raw statistic draws; used by calibration consumers that need the full
/// empirical distribution rather than the summary.
pub fn run_statistic_draws(cfg: &ExperimentConfig) -> Result<ExperimentDraws> {
    run_draws(cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg(dgp: DgpId) -> ExperimentConfig {
        ExperimentConfig {
            dgp,
            n: 100,
            replications: 50,
            master_seed: 9,
            levels: vec![0.05, 0.10],
            tests: vec![TestKind::LrcAlpha, TestKind::CAlpha, TestKind::Lr],
            info: InfoMode::Opg,
            restricted_estimator: RestrictedEstimator::Extremum,
            weibull: WeibullOptions::default(),
            rho: 0.7,
            workers: Some(2),
            debug_identity_check: false,
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mut a = quick_cfg(DgpId::Dgp2);
        a.workers = Some(1);
        let mut b = quick_cfg(DgpId::Dgp2);
        b.workers = Some(4);
        let ta = run_level_experiment(&a).unwrap();
        let tb = run_level_experiment(&b).unwrap();
        assert_eq!(ta.to_csv(), tb.to_csv());
    }

    #[test]
    fn synthetic_statistics_have_exact_chisq_form() {
        // for the quadratic criterion the adjusted statistic equals
        // n zbar1^2 / Sigma11 regardless of the boundary nuisance
        let mut cfg = quick_cfg(DgpId::SyntheticBoundary);
        cfg.replications = 20;
        let draws = run_statistic_draws(&cfg).unwrap();
        assert_eq!(draws.failures(), 0);
        for d in draws.draws.iter().flatten() {
            let lrc = d.iter().find(|s| s.test == TestKind::LrcAlpha).unwrap();
            assert_eq!(lrc.df, 1);
            assert!(lrc.statistic >= 0.0);
        }
    }

    #[test]
    fn weibull_size_runs_clean() {
        let mut cfg = quick_cfg(DgpId::WeibullSize);
        cfg.replications = 20;
        cfg.tests = TestKind::all();
        let table = run_level_experiment(&cfg).unwrap();
        assert!(table.failures <= 1, "failures {}", table.failures);
        assert_eq!(table.rows.len(), 10);
    }

    #[test]
    fn self_check_flag_adds_no_failures() {
        // the coincident-estimate identity must hold on every replication
        // that already evaluates cleanly, so the flag cannot change the
        // failure count
        let mut base = quick_cfg(DgpId::Dgp2);
        base.replications = 30;
        let mut checked = base.clone();
        checked.debug_identity_check = true;
        let plain = run_level_experiment(&base).unwrap();
        let with_check = run_level_experiment(&checked).unwrap();
        assert_eq!(plain.failures, with_check.failures);
        assert_eq!(plain.rows, with_check.rows);
    }

    #[test]
    fn power_grid_must_increase() {
        let cfg = quick_cfg(DgpId::WeibullPower);
        assert!(run_power_experiment(&cfg, &[], 0.05).is_err());
        assert!(run_power_experiment(&cfg, &[-2.0, -3.0], 0.05).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = quick_cfg(DgpId::Dgp1);
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.dgp, cfg.dgp);
        assert_eq!(back.tests, cfg.tests);
        assert!(ExperimentConfig::from_json("{\"dgp\":\"dgp1\"}").is_err());
    }
}

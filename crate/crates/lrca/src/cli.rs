//! Command line front end: Monte Carlo runs, hypothesis tests and confidence
//! intervals on user data, and model descriptions. Exit codes: 0 success,
//! 1 usage error, 2 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::inference::{
    c_alpha, classic_lm, classic_lr, invert_to_interval, lrc_alpha, t_interval, wald, CiMethod,
    CriterionEvaluation, Restriction, TestOutcome,
};
use crate::models::arch::{ArchModel, ALPHA_CAP, OMEGA_FLOOR};
use crate::models::csv::{read_panel, read_series, read_survival};
use crate::models::error_components::{EcModel, SIGMA2_V_FLOOR};
use crate::models::weibull::{WeibullModel, ETA_FLOOR};
use crate::models::InfoMode;
use crate::montecarlo::{null_calibration, run_level_experiment, run_power_experiment, ExperimentConfig};
use crate::numeric::{SymMatrix, Vector};
use crate::optimize::{maximize_linear_restricted, MaximizeOpts};

const VALID_COMMANDS: &str = "simulate, test, ci, power, calibrate, describe";

#[derive(Parser)]
#[command(name = "lrca", version, about = "Boundary-robust likelihood tests and intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InfoArg {
    Opg,
    OpgCentered,
    Hessian,
}

impl From<InfoArg> for InfoMode {
    fn from(a: InfoArg) -> Self {
        match a {
            InfoArg::Opg => InfoMode::Opg,
            InfoArg::OpgCentered => InfoMode::OpgCentered,
            InfoArg::Hessian => InfoMode::Hessian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Inversion,
    T,
}

#[derive(Subcommand)]
enum Command {
    /// Run a size experiment from a JSON config and write the rejection table.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Caps the worker pool.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test a restriction on a fitted model.
    Test {
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// `name=value,...` pins components; `c1*p1+c2*p2=v` is one linear
        /// restriction.
        #[arg(long)]
        restrict: String,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        /// ARCH lag order.
        #[arg(long, default_value_t = 1)]
        lags: usize,
        /// Impose the monotone-hazard bound eta >= 1 (weibull only).
        #[arg(long)]
        eta_ge_1: bool,
        #[arg(long, value_enum, default_value_t = InfoArg::Opg)]
        info: InfoArg,
    },
    /// Confidence interval for one parameter.
    Ci {
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Inversion)]
        method: MethodArg,
        #[arg(long, default_value_t = 1)]
        lags: usize,
        #[arg(long)]
        eta_ge_1: bool,
        #[arg(long, value_enum, default_value_t = InfoArg::Opg)]
        info: InfoArg,
    },
    /// Power curve over a grid of null values (weibull designs).
    Power {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// `start:step:end` or a comma-separated list of null values.
        #[arg(long, default_value = "-8:0.5:-2", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
    },
    /// Null-distribution quantiles and a distribution-distance check.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parameter names, bounds and data format for a model id.
    Describe {
        model: String,
        #[arg(long, default_value_t = 1)]
        lags: usize,
    },
}

enum CliError {
    Usage(String),
    Numerical(Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

/// Errors raised while interpreting inputs are usage errors; everything that
/// happens after the inputs were accepted is a numerical failure.
fn numerical(e: Error) -> CliError {
    CliError::Numerical(e)
}

/// Parses arguments and runs one command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if matches!(e.kind(), ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand) {
                eprintln!("valid commands: {VALID_COMMANDS}");
            }
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Numerical(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, seed, workers, out } => {
            let cfg = load_config(&config, seed, workers)?;
            let table = run_level_experiment(&cfg).map_err(numerical)?;
            write_artifact(&out, "rejection.csv", &table.to_csv())?;
            write_artifact(&out, "rejection.md", &table.to_markdown())?;
            print!("{}", table.to_markdown());
            Ok(())
        }
        Command::Power { config, seed, workers, out, grid, level } => {
            let cfg = load_config(&config, seed, workers)?;
            let grid = parse_grid(&grid)?;
            let curve = run_power_experiment(&cfg, &grid, level).map_err(numerical)?;
            write_artifact(&out, "power.csv", &curve.to_csv())?;
            write_artifact(&out, "power.md", &curve.to_markdown())?;
            print!("{}", curve.to_markdown());
            Ok(())
        }
        Command::Calibrate { config, seed, workers } => {
            let cfg = load_config(&config, seed, workers)?;
            let summary = null_calibration(&cfg).map_err(numerical)?;
            print!("{}", summary.to_text());
            Ok(())
        }
        Command::Test { model, data, restrict, level, lags, eta_ge_1, info } => {
            if !(0.0 < level && level < 1.0) {
                return Err(CliError::usage(format!("level {level} must lie in (0, 1)")));
            }
            let fitted = FittedModel::load(&model, &data, lags, eta_ge_1, info.into())?;
            let parsed = parse_restriction(&restrict, &fitted.names)?;
            run_test(&fitted, &parsed, level)
        }
        Command::Ci { model, data, param, level, method, lags, eta_ge_1, info } => {
            if !(0.0 < level && level < 1.0) {
                return Err(CliError::usage(format!("level {level} must lie in (0, 1)")));
            }
            let fitted = FittedModel::load(&model, &data, lags, eta_ge_1, info.into())?;
            let index = fitted.param_index(&param)?;
            run_ci(&fitted, index, level, method)
        }
        Command::Describe { model, lags } => describe(&model, lags),
    }
}

fn load_config(path: &Path, seed: Option<u64>, workers: Option<usize>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("output directory {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::usage(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |_| CliError::usage(format!("grid `{spec}`: expected `start:step:end` or a comma-separated list"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::usage(format!("grid `{spec}`: expected exactly `start:step:end`")));
        }
        let start: f64 = parts[0].trim().parse().map_err(bad)?;
        let step: f64 = parts[1].trim().parse().map_err(bad)?;
        let end: f64 = parts[2].trim().parse().map_err(bad)?;
        if !(step > 0.0) || end < start {
            return Err(CliError::usage(format!("grid `{spec}`: need step > 0 and end >= start")));
        }
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = start + step * k as f64;
            if v > end + 1e-9 * step {
                break;
            }
            out.push(v);
            k += 1;
        }
        Ok(out)
    } else {
        let mut out = Vec::new();
        for piece in spec.split(',') {
            out.push(piece.trim().parse::<f64>().map_err(bad)?);
        }
        Ok(out)
    }
}

enum ParsedRestriction {
    Fixed(Vec<(usize, f64)>),
    Linear(Vec<f64>, f64),
}

/// `name=value,...` pins components; a spec containing `*` is read as a single
/// linear combination `c1*p1+c2*p2=v` (negative coefficients are written into
/// the coefficient, e.g. `-1*beta1`).
fn parse_restriction(spec: &str, names: &[String]) -> Result<ParsedRestriction, CliError> {
    let find = |name: &str| -> Result<usize, CliError> {
        names
            .iter()
            .position(|n| n == name.trim())
            .ok_or_else(|| CliError::usage(format!("unknown parameter `{}`; have: {}", name.trim(), names.join(", "))))
    };
    if spec.contains('*') {
        let (lhs, rhs) = spec
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("restriction `{spec}`: missing `=`")))?;
        let v: f64 = rhs
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("restriction target `{}` is not a number", rhs.trim())))?;
        let mut coeffs = vec![0.0; names.len()];
        for term in lhs.split('+') {
            let (c, name) = term
                .split_once('*')
                .ok_or_else(|| CliError::usage(format!("term `{term}`: expected `coef*name`")))?;
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("coefficient `{}` is not a number", c.trim())))?;
            coeffs[find(name)?] += c;
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(CliError::usage(format!("restriction `{spec}`: all coefficients zero")));
        }
        Ok(ParsedRestriction::Linear(coeffs, v))
    } else {
        let mut fixed = Vec::new();
        for piece in spec.split(',') {
            let (name, value) = piece
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("restriction `{piece}`: expected `name=value`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("value `{}` is not a number", value.trim())))?;
            let idx = find(name)?;
            if fixed.iter().any(|&(i, _)| i == idx) {
                return Err(CliError::usage(format!("parameter `{}` pinned twice", name.trim())));
            }
            fixed.push((idx, value));
        }
        Ok(ParsedRestriction::Fixed(fixed))
    }
}

enum ModelKind {
    Arch(ArchModel),
    Weibull(WeibullModel, f64),
    Ec(EcModel),
}

struct FittedModel {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    eval_u: CriterionEvaluation,
    info: InfoMode,
    kind: ModelKind,
}

fn fit_opts() -> MaximizeOpts {
    MaximizeOpts::default()
}

impl FittedModel {
    fn load(model: &str, data: &Path, lags: usize, eta_ge_1: bool, info: InfoMode) -> Result<Self, CliError> {
        match model {
            "arch" => {
                if lags == 0 {
                    return Err(CliError::usage("arch needs --lags >= 1"));
                }
                let series = read_series(data).map_err(|e| CliError::usage(e.to_string()))?;
                let m = ArchModel::new(series, lags).map_err(numerical)?;
                let start = m.ols_nonnegative().map_err(numerical)?;
                let fit = m.fit_qmle(&start, &fit_opts()).map_err(numerical)?;
                let eval_u = m.evaluate(&fit.point, info).map_err(numerical)?;
                let mut names = vec!["omega".to_string()];
                for j in 1..=lags {
                    names.push(format!("alpha{j}"));
                }
                let lower = std::iter::once(OMEGA_FLOOR).chain(std::iter::repeat(0.0)).take(lags + 1).collect();
                let upper = std::iter::once(f64::INFINITY).chain(std::iter::repeat(ALPHA_CAP)).take(lags + 1).collect();
                Ok(FittedModel { names, lower, upper, eval_u, info, kind: ModelKind::Arch(m) })
            }
            "weibull" => {
                let (times, covs) = read_survival(data).map_err(|e| CliError::usage(e.to_string()))?;
                let m = WeibullModel::new(covs, &times).map_err(numerical)?;
                let k = m.n_covariates();
                let eta_lower = if eta_ge_1 { 1.0 } else { ETA_FLOOR };
                let start = m
                    .ls_start()
                    .unwrap_or_else(|_| Vector::from([vec![0.0; k], vec![1.0]].concat()));
                let fit = m.fit_mle(&start, eta_lower, &fit_opts()).map_err(numerical)?;
                let eval_u = m.evaluate(&fit.point, info).map_err(numerical)?;
                let mut names: Vec<String> = (0..k).map(|j| format!("beta{j}")).collect();
                names.push("eta".to_string());
                let lower = [vec![f64::NEG_INFINITY; k], vec![eta_lower]].concat();
                let upper = vec![f64::INFINITY; k + 1];
                Ok(FittedModel { names, lower, upper, eval_u, info, kind: ModelKind::Weibull(m, eta_lower) })
            }
            "error-components" => {
                let panel = read_panel(data).map_err(|e| CliError::usage(e.to_string()))?;
                let k = panel.n_covariates();
                let m = EcModel::new(panel);
                let fit = m.fit(&fit_opts()).map_err(numerical)?;
                let eval_u = m.evaluate(&fit.point, info).map_err(numerical)?;
                let mut names: Vec<String> = (0..k).map(|j| format!("beta{j}")).collect();
                names.extend(["sigma2_v", "sigma2_eta", "sigma2_lambda"].map(String::from));
                let lower = [vec![f64::NEG_INFINITY; k], vec![SIGMA2_V_FLOOR, 0.0, 0.0]].concat();
                let upper = vec![f64::INFINITY; k + 3];
                Ok(FittedModel { names, lower, upper, eval_u, info, kind: ModelKind::Ec(m) })
            }
            other => Err(CliError::usage(format!(
                "unknown model `{other}`; valid models: arch, weibull, error-components"
            ))),
        }
    }

    fn param_index(&self, name: &str) -> Result<usize, CliError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::usage(format!("unknown parameter `{name}`; have: {}", self.names.join(", "))))
    }

    fn evaluate(&self, point: &Vector) -> crate::error::Result<CriterionEvaluation> {
        match &self.kind {
            ModelKind::Arch(m) => m.evaluate(point, self.info),
            ModelKind::Weibull(m, _) => m.evaluate(point, self.info),
            ModelKind::Ec(m) => m.evaluate(point, self.info),
        }
    }

    fn restricted_eval_fixed(&self, fixed: &[(usize, f64)]) -> crate::error::Result<CriterionEvaluation> {
        let opts = fit_opts();
        let point = match &self.kind {
            ModelKind::Arch(m) => {
                let mut start = self.eval_u.point.clone();
                for &(i, v) in fixed {
                    start[i] = v;
                }
                m.fit_qmle_fixed(&start, fixed, &opts)?.point
            }
            ModelKind::Weibull(m, eta_lower) => {
                let mut start = self.eval_u.point.clone();
                for &(i, v) in fixed {
                    start[i] = v;
                }
                m.fit_mle_fixed(&start, *eta_lower, fixed, &opts)?.point
            }
            ModelKind::Ec(m) => m.fit_fixed(fixed, &opts)?.point,
        };
        self.evaluate(&point)
    }

    fn restricted_eval_linear(&self, coeffs: &[f64], v: f64) -> crate::error::Result<CriterionEvaluation> {
        let f = |t: &Vector| match &self.kind {
            ModelKind::Arch(m) => m.loglik(t),
            ModelKind::Weibull(m, _) => m.loglik(t),
            ModelKind::Ec(m) => m.loglik(t),
        };
        let fit = maximize_linear_restricted(
            &f,
            &self.eval_u.point,
            &Vector::from(coeffs.to_vec()),
            v,
            &fit_opts(),
        )?;
        self.evaluate(&fit.point)
    }

    /// Sandwich covariance of the unrestricted estimate, 1/n folded in.
    fn sandwich_cov(&self) -> crate::error::Result<SymMatrix> {
        let chol = self.eval_u.hessian.cholesky()?;
        let hinv = chol.inverse();
        let m = hinv.as_matrix().mul(&self.eval_u.info.as_matrix().mul(hinv.as_matrix()));
        SymMatrix::new(m.scale(1.0 / self.eval_u.n as f64))
    }
}

fn print_outcome(name: &str, o: &TestOutcome) {
    println!(
        "{name}: statistic = {:.6}, df = {}, p = {:.4}, {}",
        o.statistic,
        o.df,
        o.p_value,
        if o.reject { "reject" } else { "accept" }
    );
}

fn run_test(fitted: &FittedModel, parsed: &ParsedRestriction, level: f64) -> Result<(), CliError> {
    let (restriction, eval_r) = match parsed {
        ParsedRestriction::Fixed(fixed) => {
            let indices: Vec<usize> = fixed.iter().map(|&(i, _)| i).collect();
            let values: Vec<f64> = fixed.iter().map(|&(_, v)| v).collect();
            let r = Restriction::fix_components(&indices, &values);
            let e = fitted.restricted_eval_fixed(fixed).map_err(numerical)?;
            (r, e)
        }
        ParsedRestriction::Linear(coeffs, v) => {
            let r = Restriction::linear(Vector::from(coeffs.clone()), *v);
            let e = fitted.restricted_eval_linear(coeffs, *v).map_err(numerical)?;
            (r, e)
        }
    };
    println!("n = {}", fitted.eval_u.n);
    for (name, value) in fitted.names.iter().zip(fitted.eval_u.point.as_slice()) {
        println!("{name} = {value:.6}");
    }
    print_outcome("lrc-alpha", &lrc_alpha(&fitted.eval_u, &eval_r, &restriction, level).map_err(numerical)?);
    print_outcome("c-alpha", &c_alpha(&eval_r, &restriction, level).map_err(numerical)?);
    print_outcome(
        "lr",
        &classic_lr(&fitted.eval_u, &eval_r, restriction.q(), level).map_err(numerical)?,
    );
    print_outcome("lm", &classic_lm(&eval_r, &restriction, level).map_err(numerical)?);
    let cov = fitted.sandwich_cov().map_err(numerical)?;
    print_outcome("wald", &wald(&fitted.eval_u.point, &cov, &restriction, level).map_err(numerical)?);
    Ok(())
}

fn run_ci(fitted: &FittedModel, index: usize, level: f64, method: MethodArg) -> Result<(), CliError> {
    let center = fitted.eval_u.point[index];
    let interval = match method {
        MethodArg::T => {
            let cov = fitted.sandwich_cov().map_err(numerical)?;
            let se = cov[(index, index)].sqrt();
            t_interval(center, se, level).map_err(numerical)?
        }
        MethodArg::Inversion => {
            let alpha = 1.0 - level;
            let builder = |v: f64| {
                let restriction = Restriction::fix_components(&[index], &[v]);
                let eval_r = fitted.restricted_eval_fixed(&[(index, v)])?;
                lrc_alpha(&fitted.eval_u, &eval_r, &restriction, alpha)
            };
            let bounds = Some((fitted.lower[index], fitted.upper[index]));
            invert_to_interval(builder, center, level, bounds).map_err(numerical)?
        }
    };
    println!(
        "{}: estimate = {:.6}, {}% CI = [{:.6}, {:.6}] ({}{})",
        fitted.names[index],
        center,
        100.0 * level,
        interval.lower,
        interval.upper,
        match interval.method {
            CiMethod::Inversion => "inversion",
            CiMethod::TRatio => "t",
        },
        if interval.truncated_at_boundary { ", truncated at parameter bound" } else { "" }
    );
    Ok(())
}

fn describe(model: &str, lags: usize) -> Result<(), CliError> {
    match model {
        "arch" => {
            println!("arch: conditional-variance model of order p (--lags, default 1)");
            println!("parameters: omega in [{OMEGA_FLOOR}, inf), alpha1..alpha{lags} in [0, {ALPHA_CAP}]");
            println!("data: CSV with single column `x` (the series)");
            println!("restriction syntax: `alpha2=0` or `1*alpha1+1*alpha2=0.5`");
        }
        "weibull" => {
            println!("weibull: survival regression on log durations");
            println!("parameters: beta0..beta(k-1) unbounded (k = covariate columns + intercept),");
            println!("            eta > 0; pass --eta-ge-1 to impose the monotone-hazard bound eta >= 1");
            println!("data: CSV with columns `time, <covariates...>`; an intercept is prepended");
            println!("restriction syntax: `beta0=-5,beta1=1` or `1*beta1+-1*eta=0`");
        }
        "error-components" => {
            println!("error-components: balanced two-way panel regression with random effects");
            println!("parameters: beta0..beta(k-1) unbounded (k = covariate columns + intercept),");
            println!("            sigma2_v >= {SIGMA2_V_FLOOR}, sigma2_eta >= 0, sigma2_lambda >= 0");
            println!("data: CSV with columns `id, t, y, <covariates...>`; every (id, t) cell present");
            println!("restriction syntax: `sigma2_lambda=0` or `1*sigma2_eta+-1*sigma2_lambda=0`");
        }
        other => {
            return Err(CliError::usage(format!(
                "{}; valid models: arch, weibull, error-components",
                Error::UnknownModel(other.to_string())
            )))
        }
    }
    Ok(())
}

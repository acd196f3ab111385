use thiserror::Error;

/// Errors surfaced by the numeric, inference, optimization and model layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not positive definite (smallest Cholesky pivot {pivot:.3e} vs threshold {threshold:.3e})")]
    NotPositiveDefinite { pivot: f64, threshold: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix asymmetry {0:.3e} exceeds tolerance")]
    AsymmetricInput(f64),
    #[error("probability {0} outside [0, 1)")]
    InvalidProbability(f64),
    #[error("negative test statistic {0}")]
    NegativeStatistic(f64),
    #[error("non-finite value encountered in {0}")]
    NonFiniteEvaluation(String),
    #[error("restriction Jacobian is rank deficient")]
    RankDeficientJacobian,
    #[error("sample sizes differ between evaluations: {0} vs {1}")]
    SampleSizeMismatch(usize, usize),
    #[error("test statistic at the interval center exceeds the critical value ({0:.4} > {1:.4})")]
    CenterRejected(f64, f64),
    #[error("no rejection bracket found within the search range")]
    NoBracket,
    #[error("standard error must be positive, got {0}")]
    NonPositiveSE(f64),
    #[error("ARCH coefficients violate stationarity: sum of alphas {0} >= 1")]
    NonStationary(f64),
    #[error("conditional variance is not positive (omega = {0})")]
    NonPositiveVariance(f64),
    #[error("regression design is singular")]
    SingularDesign,
    #[error("Weibull shape must be positive, got {0}")]
    NonPositiveShape(f64),
    #[error("event times must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("moment estimator denominator is degenerate")]
    DegenerateDenominator,
    #[error("idiosyncratic variance must be positive, got {0}")]
    NonPositiveIdiosyncraticVariance(f64),
    #[error("panel is unbalanced: {0}")]
    UnbalancedPanel(String),
    #[error("invalid experiment configuration: {0}")]
    ConfigInvalid(String),
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

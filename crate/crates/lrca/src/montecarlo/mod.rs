//! Seeded, parallel Monte Carlo harness: size tables, power curves and
//! null-distribution calibration for the test statistics.

pub mod experiment;
pub mod output;
pub mod seeding;

pub use experiment::{
    null_calibration, run_level_experiment, run_power_experiment, run_statistic_draws, DgpId,
    ExperimentConfig, ExperimentDraws, RestrictedEstimator, StatDraw, TestKind, WeibullOptions,
};
pub use output::{CalibrationSummary, PowerCurve, RejectionRow, RejectionTable, TestCalibration};
pub use seeding::{replication_rng, replication_seed};

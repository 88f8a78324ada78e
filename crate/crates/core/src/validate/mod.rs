//! Monte Carlo coverage of confidence intervals on the two-scale test bed, and
//! a side-by-side comparison of the drift estimators on matched data.

mod compare;
mod coverage;
mod pipeline;

pub use compare::{method_comparison, ComparisonConfig, ComparisonRow};
pub use coverage::{coverage_experiment, CoverageResult, CoverageSpec, TRIAL_FAILURE_BUDGET};
pub use pipeline::{drift_band, interval_for, DriftData, DriftEstimator, FitWithInterval, IntervalOptions};

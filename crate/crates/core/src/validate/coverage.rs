use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::dataset::fmt17;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::twoscale::{generate_paths, record_stride_for, sample_iid, TwoScaleParams, THETA_STAR};
use crate::uq::CiMethod;

use super::pipeline::{interval_for, DriftData, DriftEstimator, IntervalOptions};

/// Fraction of trials allowed to fail before the experiment is rejected.
pub const TRIAL_FAILURE_BUDGET: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSpec {
    pub estimator: DriftEstimator,
    pub interval: CiMethod,
    /// Samples per trial for i.i.d. estimators, recorded states for path estimators.
    pub n: usize,
    pub trials: usize,
    pub theta_star: Vec<f64>,
    pub master_seed: u64,
    pub epsilon: f64,
    pub burn_in_time: f64,
    /// Time between i.i.d. samples along the generating path.
    pub stride_time: f64,
    /// Recorded step of path data.
    pub h: f64,
    pub options: IntervalOptions,
}

impl Default for CoverageSpec {
    fn default() -> Self {
        CoverageSpec {
            estimator: DriftEstimator::Fm,
            interval: CiMethod::Asymptotic,
            n: 500,
            trials: 200,
            theta_star: THETA_STAR.to_vec(),
            master_seed: 0,
            epsilon: 0.005,
            burn_in_time: 100.0,
            stride_time: 5.0,
            h: 0.01,
            options: IntervalOptions::default(),
        }
    }
}

impl CoverageSpec {
    pub fn label(&self) -> String {
        format!("{}+{}", self.estimator.as_str(), self.interval.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    /// Estimator and interval, e.g. `fm+asymptotic`.
    pub method: String,
    pub n: usize,
    pub alpha: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Trials whose fit or interval returned an error; excluded from coverage.
    pub failed_trials: usize,
    /// Completed trials whose RE Newton iteration did not converge.
    pub non_converged: usize,
    pub per_param_coverage: Vec<f64>,
    pub mean_coverage: f64,
}

impl CoverageResult {
    /// `3·sqrt(c(1-c)/trials)` around the mean coverage.
    pub fn binomial_halfwidth(&self) -> f64 {
        let c = self.mean_coverage;
        let done = (self.trials - self.failed_trials).max(1) as f64;
        3.0 * (c * (1.0 - c) / done).sqrt()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        let k = self.per_param_coverage.len();
        let cols: Vec<String> = (1..=k).map(|i| format!("coverage_{i}")).collect();
        writeln!(w, "method,n,alpha,trials,failed_trials,non_converged,mean_coverage,{}", cols.join(","))?;
        let vals: Vec<String> = self.per_param_coverage.iter().map(|v| fmt17(*v)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.n,
            fmt17(self.alpha),
            self.trials,
            self.failed_trials,
            self.non_converged,
            fmt17(self.mean_coverage),
            vals.join(",")
        )?;
        Ok(())
    }
}

struct TrialOutcome {
    contained: Vec<bool>,
    converged: bool,
}

fn run_trial(spec: &CoverageSpec, basis: &BasisSet, t: usize) -> Result<TrialOutcome> {
    let trial_seed = derive_seed(spec.master_seed, t as u64);
    let params = TwoScaleParams {
        burn_in_time: spec.burn_in_time,
        ..TwoScaleParams::new(spec.epsilon, trial_seed)
    };
    let opts = IntervalOptions {
        bootstrap_seed: derive_seed(trial_seed, 1),
        ..spec.options.clone()
    };
    let fit = if spec.estimator.uses_paths() {
        let data = generate_paths(&params, 1, spec.n, record_stride_for(&params, spec.h))?;
        interval_for(spec.estimator, DriftData::Paths(&data), basis, spec.interval, &opts)?
    } else {
        let data = sample_iid(&params, spec.n, spec.stride_time, spec.estimator == DriftEstimator::Fm)?;
        interval_for(spec.estimator, DriftData::Iid(&data), basis, spec.interval, &opts)?
    };
    let contained = spec
        .theta_star
        .iter()
        .enumerate()
        .map(|(k, &v)| fit.interval.contains(k, v))
        .collect();
    Ok(TrialOutcome {
        contained,
        converged: fit.estimate.converged,
    })
}

/// Fraction of trials whose interval contains each coordinate of θ*.
/// Trial `t` simulates with seed `derive_seed(master_seed, t)`, so the result
/// does not depend on execution order or thread count.
pub fn coverage_experiment(spec: &CoverageSpec) -> Result<CoverageResult> {
    if spec.trials < 20 {
        return Err(Error::Configuration(format!(
            "coverage needs at least 20 trials, got {}",
            spec.trials
        )));
    }
    if spec.theta_star.is_empty() {
        return Err(Error::Configuration("theta_star is empty".into()));
    }
    let basis = BasisSet::monomial(spec.theta_star.len())?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, &basis, t))
        .collect();
    let budget = (TRIAL_FAILURE_BUDGET * spec.trials as f64).floor() as usize;
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failed = spec.trials - ok.len();
    if failed > budget {
        return Err(Error::TrialBudget {
            failed,
            total: spec.trials,
            budget,
        });
    }
    let k = spec.theta_star.len();
    let per_param_coverage: Vec<f64> = (0..k)
        .map(|j| ok.iter().filter(|o| o.contained[j]).count() as f64 / ok.len() as f64)
        .collect();
    let mean_coverage = per_param_coverage.iter().sum::<f64>() / k as f64;
    Ok(CoverageResult {
        method: spec.label(),
        n: spec.n,
        alpha: spec.options.alpha,
        trials: spec.trials,
        master_seed: spec.master_seed,
        failed_trials: failed,
        non_converged: ok.iter().filter(|o| !o.converged).count(),
        per_param_coverage,
        mean_coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(alpha: f64) -> CoverageSpec {
        CoverageSpec {
            n: 40,
            trials: 20,
            master_seed: 17,
            stride_time: 1.0,
            burn_in_time: 5.0,
            theta_star: THETA_STAR[..3].to_vec(),
            options: IntervalOptions { alpha, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn too_few_trials_is_a_configuration_error() {
        let spec = CoverageSpec { trials: 19, ..small(0.05) };
        assert!(matches!(coverage_experiment(&spec), Err(Error::Configuration(_))));
    }

    #[test]
    fn wide_intervals_cover_everything() {
        let r = coverage_experiment(&small(1e-9)).unwrap();
        assert_eq!(r.per_param_coverage, vec![1.0; 3]);
        assert_eq!(r.mean_coverage, 1.0);
        assert_eq!(r.method, "fm+asymptotic");
    }

    #[test]
    fn zero_width_intervals_cover_nothing() {
        let r = coverage_experiment(&small(1.0)).unwrap();
        assert_eq!(r.mean_coverage, 0.0);
    }

    #[test]
    fn mean_is_average_of_parameters_and_values_are_fractions() {
        let r = coverage_experiment(&small(0.3)).unwrap();
        let avg = r.per_param_coverage.iter().sum::<f64>() / 3.0;
        assert!((r.mean_coverage - avg).abs() < 1e-15);
        assert!(r.per_param_coverage.iter().all(|c| (0.0..=1.0).contains(c)));
        for c in &r.per_param_coverage {
            assert_eq!((c * 20.0).round(), c * 20.0);
        }
    }

    #[test]
    fn failing_trials_exceed_budget() {
        // a basis larger than the sample forces rank deficiency in every trial
        let spec = CoverageSpec {
            n: 3,
            theta_star: vec![0.0; 5],
            ..small(0.05)
        };
        assert!(matches!(coverage_experiment(&spec), Err(Error::TrialBudget { failed: 20, .. })));
    }

    #[test]
    fn csv_has_one_column_per_parameter() {
        let r = coverage_experiment(&small(0.05)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, &["seed=17".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed=17");
        assert!(lines[1].ends_with("coverage_1,coverage_2,coverage_3"));
        assert!(lines[2].starts_with("fm+asymptotic,40,"));
    }
}

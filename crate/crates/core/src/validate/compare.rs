use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::dataset::fmt17;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::twoscale::{generate_paths, record_stride_for, sample_iid, TwoScaleParams};
use crate::uq::CiMethod;

use super::pipeline::{interval_for, DriftData, DriftEstimator, IntervalOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    pub methods: Vec<DriftEstimator>,
    pub seed: u64,
    pub epsilon: f64,
    pub burn_in_time: f64,
    /// Number of i.i.d. samples shared by FM and RE.
    pub n_iid: usize,
    pub stride_time: f64,
    /// Length of the single path shared by RER and time-series FM.
    pub n_t: usize,
    pub h: f64,
    /// Number of drift coefficients.
    pub k: usize,
    pub interval: CiMethod,
    pub options: IntervalOptions,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            methods: vec![DriftEstimator::Fm, DriftEstimator::Re, DriftEstimator::Rer],
            seed: 0,
            epsilon: 0.005,
            burn_in_time: 100.0,
            n_iid: 500,
            stride_time: 5.0,
            n_t: 50_000,
            h: 0.01,
            k: 5,
            interval: CiMethod::Asymptotic,
            options: IntervalOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: DriftEstimator,
    pub n: usize,
    pub theta: Vec<f64>,
    /// Absent when the interval has no variance (percentile, or no interval).
    pub variance: Option<Vec<f64>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Fit plus interval, in seconds. Not reproducible across runs.
    pub wall_time_s: f64,
}

impl ComparisonRow {
    /// Long-format CSV, one line per (method, parameter).
    pub fn write_csv<W: Write>(rows: &[ComparisonRow], mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        writeln!(w, "method,param,estimate,variance,lower,upper,converged,n,wall_time_s")?;
        let cell = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map(|v| fmt17(v[k])).unwrap_or_default();
        for r in rows {
            for k in 0..r.theta.len() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{:.4}",
                    r.method.as_str(),
                    k + 1,
                    fmt17(r.theta[k]),
                    cell(&r.variance, k),
                    cell(&r.lower, k),
                    cell(&r.upper, k),
                    r.converged,
                    r.n,
                    r.wall_time_s
                )?;
            }
        }
        Ok(())
    }
}

/// Run every requested estimator on matched data: FM and RE share one i.i.d.
/// sample, RER and time-series FM share one recorded path.
pub fn method_comparison(config: &ComparisonConfig) -> Result<Vec<ComparisonRow>> {
    if config.methods.is_empty() {
        return Err(Error::Configuration("no methods to compare".into()));
    }
    let basis = BasisSet::monomial(config.k)?;
    let params = |stream: u64| TwoScaleParams {
        burn_in_time: config.burn_in_time,
        ..TwoScaleParams::new(config.epsilon, derive_seed(config.seed, stream))
    };
    let opts = IntervalOptions {
        bootstrap_seed: derive_seed(config.seed, 2),
        ..config.options.clone()
    };
    let needs_iid = config.methods.iter().any(|m| !m.uses_paths());
    let needs_path = config.methods.iter().any(|m| m.uses_paths());
    let iid = if needs_iid {
        Some(sample_iid(&params(0), config.n_iid, config.stride_time, true)?)
    } else {
        None
    };
    let path = if needs_path {
        let p = params(1);
        Some(generate_paths(&p, 1, config.n_t, record_stride_for(&p, config.h))?)
    } else {
        None
    };
    config
        .methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let (data, n) = match (&iid, &path) {
                (Some(d), _) if !m.uses_paths() => (DriftData::Iid(d), d.len()),
                (_, Some(p)) => (DriftData::Paths(p), p.total_states()),
                _ => unreachable!(),
            };
            // time-series FM has no asymptotic interval of its own
            let interval = if m == DriftEstimator::FmTs && config.interval == CiMethod::Asymptotic {
                None
            } else {
                Some(interval_for(m, data, &basis, config.interval, &opts)?)
            };
            let estimate = match (&interval, data) {
                (Some(f), _) => f.estimate.clone(),
                (None, DriftData::Paths(p)) => crate::estimators::fit_fm_ts(p, &basis)?,
                (None, DriftData::Iid(_)) => unreachable!(),
            };
            let report = interval.map(|f| f.interval);
            Ok(ComparisonRow {
                method: m,
                n,
                theta: estimate.theta,
                variance: report.as_ref().and_then(|r| r.variance.clone()),
                lower: report.as_ref().map(|r| r.lower.clone()),
                upper: report.as_ref().map(|r| r.upper.clone()),
                converged: estimate.converged,
                warnings: estimate.warnings,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(methods: Vec<DriftEstimator>) -> ComparisonConfig {
        ComparisonConfig {
            methods,
            seed: 3,
            n_iid: 200,
            stride_time: 1.0,
            n_t: 5_000,
            burn_in_time: 5.0,
            k: 3,
            ..Default::default()
        }
    }

    #[test]
    fn empty_method_list_is_rejected() {
        assert!(matches!(method_comparison(&quick(vec![])), Err(Error::Configuration(_))));
    }

    #[test]
    fn one_row_per_method_in_order() {
        let rows = method_comparison(&quick(vec![
            DriftEstimator::Rer,
            DriftEstimator::Fm,
            DriftEstimator::FmTs,
        ]))
        .unwrap();
        let names: Vec<_> = rows.iter().map(|r| r.method).collect();
        assert_eq!(names, vec![DriftEstimator::Rer, DriftEstimator::Fm, DriftEstimator::FmTs]);
        assert_eq!(rows[0].n, 5_000);
        assert_eq!(rows[1].n, 200);
        assert!(rows[2].variance.is_none() && rows[2].lower.is_none());
        for r in &rows[..2] {
            let (lo, hi) = (r.lower.as_ref().unwrap(), r.upper.as_ref().unwrap());
            assert!((0..3).all(|k| lo[k] <= r.theta[k] && r.theta[k] <= hi[k]));
        }
    }

    #[test]
    fn numeric_columns_are_reproducible() {
        let cfg = quick(vec![DriftEstimator::Fm, DriftEstimator::Rer]);
        let a = method_comparison(&cfg).unwrap();
        let b = method_comparison(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.theta, y.theta);
            assert_eq!(x.variance, y.variance);
        }
    }

    #[test]
    fn csv_is_long_format() {
        let rows = method_comparison(&quick(vec![DriftEstimator::Fm])).unwrap();
        let mut buf = Vec::new();
        ComparisonRow::write_csv(&rows, &mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("fm,1,"));
    }
}

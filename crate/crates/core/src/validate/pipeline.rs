use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::dataset::{IidDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::estimate::ParamEstimate;
use crate::estimators::{fit_fm_iid, fit_fm_ts, fit_re_iid, fit_rer, NewtonOptions};
use crate::uq::{
    bootstrap, bootstrap_percentile_ci, bootstrap_standard_ci, fm_fisher_pair, jackknife, path_fisher_pair,
    qoi_bootstrap_ci, re_fisher_pair, sandwich_ci_iid, sandwich_ci_ts, CiMethod, ConfidenceReport, QoiBand,
    Resample,
};

/// Drift estimators of the two-scale test bed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftEstimator {
    Fm,
    Re,
    Rer,
    FmTs,
}

impl DriftEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            DriftEstimator::Fm => "fm",
            DriftEstimator::Re => "re",
            DriftEstimator::Rer => "rer",
            DriftEstimator::FmTs => "fm-ts",
        }
    }

    /// True for estimators that consume time series rather than i.i.d. samples.
    pub fn uses_paths(self) -> bool {
        matches!(self, DriftEstimator::Rer | DriftEstimator::FmTs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalOptions {
    pub alpha: f64,
    pub bootstrap_b: usize,
    pub bootstrap_seed: u64,
    /// Batch size for the batch-means covariance; `None` uses `⌊√n⌋`.
    pub batch: Option<usize>,
    pub newton: NewtonOptions,
}

impl Default for IntervalOptions {
    fn default() -> Self {
        IntervalOptions {
            alpha: 0.05,
            bootstrap_b: 200,
            bootstrap_seed: 0,
            batch: None,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWithInterval {
    pub estimate: ParamEstimate,
    pub interval: ConfidenceReport,
}

fn resampled<D, F>(data: &D, fit: F, theta: &[f64], method: CiMethod, opts: &IntervalOptions) -> Result<ConfidenceReport>
where
    D: Resample,
    F: Fn(&D) -> Result<Vec<f64>> + Sync,
{
    match method {
        CiMethod::Jackknife => jackknife(data, fit, opts.alpha).map(|j| j.report),
        CiMethod::BootstrapStandard => {
            let reps = bootstrap(data, fit, opts.bootstrap_b, opts.bootstrap_seed)?;
            bootstrap_standard_ci(theta, &reps, opts.alpha)
        }
        CiMethod::BootstrapPercentile => {
            let reps = bootstrap(data, fit, opts.bootstrap_b, opts.bootstrap_seed)?;
            bootstrap_percentile_ci(theta, &reps, opts.alpha)
        }
        CiMethod::Asymptotic => unreachable!("asymptotic intervals are handled by the caller"),
    }
}

fn iid_interval(
    estimator: DriftEstimator,
    data: &IidDataset,
    basis: &BasisSet,
    method: CiMethod,
    opts: &IntervalOptions,
) -> Result<FitWithInterval> {
    let estimate = match estimator {
        DriftEstimator::Fm => fit_fm_iid(data, basis)?,
        DriftEstimator::Re => fit_re_iid(data, basis, &opts.newton)?,
        _ => unreachable!(),
    };
    let theta = estimate.theta.clone();
    let interval = if method == CiMethod::Asymptotic {
        let pair = match estimator {
            DriftEstimator::Fm => fm_fisher_pair(&theta, data, basis)?,
            _ => re_fisher_pair(&theta, data, &opts.newton.quad)?,
        };
        sandwich_ci_iid(&theta, &pair, data.len(), opts.alpha)?
    } else {
        // refits use the same start as the full fit; starting at θ̂ would pin
        // replicates to θ̂ whenever θ̂ sits on the integrability boundary
        let fit = |d: &IidDataset| -> Result<Vec<f64>> {
            match estimator {
                DriftEstimator::Fm => fit_fm_iid(d, basis).map(|e| e.theta),
                _ => fit_re_iid(d, basis, &opts.newton).map(|e| e.theta),
            }
        };
        resampled(data, fit, &theta, method, opts)?
    };
    Ok(FitWithInterval { estimate, interval })
}

fn path_interval(
    estimator: DriftEstimator,
    data: &TimeSeriesDataset,
    basis: &BasisSet,
    method: CiMethod,
    opts: &IntervalOptions,
) -> Result<FitWithInterval> {
    let fit_one = |d: &TimeSeriesDataset| match estimator {
        DriftEstimator::Rer => fit_rer(d, basis),
        _ => fit_fm_ts(d, basis),
    };
    let estimate = fit_one(data)?;
    let theta = estimate.theta.clone();
    let interval = match (estimator, method) {
        (DriftEstimator::Rer, CiMethod::Asymptotic) => {
            if data.n_paths() != 1 {
                return Err(Error::Unsupported(
                    "path-space asymptotic intervals need a single path; resample over paths instead".into(),
                ));
            }
            let pair = path_fisher_pair(&theta, data, basis, opts.batch)?;
            sandwich_ci_ts(&theta, &pair.f1, &pair.f2, data.path_len(0) - 1, opts.alpha)?
        }
        (_, CiMethod::Asymptotic) => {
            return Err(Error::Unsupported("no asymptotic interval for time-series force matching".into()))
        }
        _ if data.n_paths() < 2 => {
            return Err(Error::Unsupported(
                "resampling time series works over whole paths and needs at least two".into(),
            ))
        }
        _ => resampled(data, |d: &TimeSeriesDataset| fit_one(d).map(|e| e.theta), &theta, method, opts)?,
    };
    Ok(FitWithInterval { estimate, interval })
}

/// Input of [`interval_for`].
#[derive(Clone, Copy, Debug)]
pub enum DriftData<'a> {
    Iid(&'a IidDataset),
    Paths(&'a TimeSeriesDataset),
}

/// Fit `estimator` and build a `method` interval around the estimate.
/// Resampling units are rows for i.i.d. data and whole paths for time series.
pub fn interval_for(
    estimator: DriftEstimator,
    data: DriftData<'_>,
    basis: &BasisSet,
    method: CiMethod,
    opts: &IntervalOptions,
) -> Result<FitWithInterval> {
    match (estimator.uses_paths(), data) {
        (false, DriftData::Iid(d)) => iid_interval(estimator, d, basis, method, opts),
        (true, DriftData::Paths(d)) => path_interval(estimator, d, basis, method, opts),
        (false, DriftData::Paths(_)) => Err(Error::arg(format!(
            "estimator {} needs i.i.d. samples, got time series",
            estimator.as_str()
        ))),
        (true, DriftData::Iid(_)) => Err(Error::arg(format!(
            "estimator {} needs time series, got i.i.d. samples",
            estimator.as_str()
        ))),
    }
}

/// Bootstrap percentile band of the fitted drift `a(x) = Σ θ_k φ_k(x)` over `grid`.
pub fn drift_band(
    estimator: DriftEstimator,
    data: DriftData<'_>,
    basis: &BasisSet,
    grid: &[f64],
    opts: &IntervalOptions,
) -> Result<QoiBand> {
    let drift = |t: &[f64], x: f64| basis.eval_model(t, x);
    match (estimator, data) {
        (DriftEstimator::Fm | DriftEstimator::Re, DriftData::Iid(d)) => {
            let theta = match estimator {
                DriftEstimator::Fm => fit_fm_iid(d, basis)?.theta,
                _ => fit_re_iid(d, basis, &opts.newton)?.theta,
            };
            let fit = |s: &IidDataset| match estimator {
                DriftEstimator::Fm => fit_fm_iid(s, basis).map(|e| e.theta),
                _ => fit_re_iid(s, basis, &opts.newton).map(|e| e.theta),
            };
            let reps = bootstrap(d, fit, opts.bootstrap_b, opts.bootstrap_seed)?;
            qoi_bootstrap_ci(grid, &theta, &reps, drift, opts.alpha)
        }
        (DriftEstimator::Rer | DriftEstimator::FmTs, DriftData::Paths(d)) => {
            if d.n_paths() < 2 {
                return Err(Error::Unsupported(
                    "resampling time series works over whole paths and needs at least two".into(),
                ));
            }
            let fit = |s: &TimeSeriesDataset| match estimator {
                DriftEstimator::Rer => fit_rer(s, basis).map(|e| e.theta),
                _ => fit_fm_ts(s, basis).map(|e| e.theta),
            };
            let theta = fit(d)?;
            let reps = bootstrap(d, fit, opts.bootstrap_b, opts.bootstrap_seed)?;
            qoi_bootstrap_ci(grid, &theta, &reps, drift, opts.alpha)
        }
        _ => Err(Error::arg(format!(
            "estimator {} does not match the data layout",
            estimator.as_str()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoscale::{generate_paths, record_stride_for, sample_iid, TwoScaleParams};

    fn params(seed: u64) -> TwoScaleParams {
        TwoScaleParams {
            burn_in_time: 5.0,
            ..TwoScaleParams::new(0.005, seed)
        }
    }

    fn iid() -> IidDataset {
        sample_iid(&params(11), 150, 0.5, true).unwrap()
    }

    fn paths(n_paths: usize) -> TimeSeriesDataset {
        let p = params(12);
        generate_paths(&p, n_paths, 400, record_stride_for(&p, 0.01)).unwrap()
    }

    fn basis() -> BasisSet {
        BasisSet::monomial(3).unwrap()
    }

    #[test]
    fn resampled_intervals_bracket_the_estimate() {
        let d = iid();
        let opts = IntervalOptions {
            bootstrap_b: 40,
            ..Default::default()
        };
        for est in [DriftEstimator::Fm, DriftEstimator::Re] {
            for m in [CiMethod::Jackknife, CiMethod::BootstrapStandard] {
                let r = interval_for(est, DriftData::Iid(&d), &basis(), m, &opts).unwrap();
                let var = r.interval.variance.as_ref().unwrap();
                for k in 0..3 {
                    // refits must move; a frozen refit gives zero spread
                    assert!(var[k] > 1e-8, "{} {} var {}", est.as_str(), m.as_str(), var[k]);
                    assert!(r.interval.lower[k] < r.estimate.theta[k]);
                    assert!(r.estimate.theta[k] < r.interval.upper[k]);
                }
            }
        }
    }

    #[test]
    fn asymptotic_fm_matches_direct_sandwich() {
        let d = iid();
        let opts = IntervalOptions::default();
        let r = interval_for(DriftEstimator::Fm, DriftData::Iid(&d), &basis(), CiMethod::Asymptotic, &opts).unwrap();
        let pair = fm_fisher_pair(&r.estimate.theta, &d, &basis()).unwrap();
        let direct = sandwich_ci_iid(&r.estimate.theta, &pair, d.len(), 0.05).unwrap();
        assert_eq!(r.interval, direct);
    }

    #[test]
    fn layout_mismatch_is_an_argument_error() {
        let d = iid();
        let ts = paths(2);
        let opts = IntervalOptions::default();
        let a = interval_for(DriftEstimator::Rer, DriftData::Iid(&d), &basis(), CiMethod::Jackknife, &opts);
        let b = interval_for(DriftEstimator::Fm, DriftData::Paths(&ts), &basis(), CiMethod::Jackknife, &opts);
        assert!(matches!(a, Err(Error::Argument(_))));
        assert!(matches!(b, Err(Error::Argument(_))));
    }

    #[test]
    fn unsupported_path_intervals() {
        let one = paths(1);
        let two = paths(2);
        let opts = IntervalOptions::default();
        let fm_ts = interval_for(DriftEstimator::FmTs, DriftData::Paths(&two), &basis(), CiMethod::Asymptotic, &opts);
        let rer_multi = interval_for(DriftEstimator::Rer, DriftData::Paths(&two), &basis(), CiMethod::Asymptotic, &opts);
        let jk_single = interval_for(DriftEstimator::Rer, DriftData::Paths(&one), &basis(), CiMethod::Jackknife, &opts);
        let band_single = drift_band(DriftEstimator::Rer, DriftData::Paths(&one), &basis(), &[0.0], &opts);
        assert!(matches!(fm_ts, Err(Error::Unsupported(_))));
        assert!(matches!(rer_multi, Err(Error::Unsupported(_))));
        assert!(matches!(jk_single, Err(Error::Unsupported(_))));
        assert!(matches!(band_single, Err(Error::Unsupported(_))));
    }

    #[test]
    fn rer_asymptotic_on_one_path() {
        let one = paths(1);
        let r = interval_for(
            DriftEstimator::Rer,
            DriftData::Paths(&one),
            &basis(),
            CiMethod::Asymptotic,
            &IntervalOptions::default(),
        )
        .unwrap();
        assert!(r.interval.variance.unwrap().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn drift_band_follows_the_fit() {
        let d = iid();
        let grid = [-1.0, 0.0, 1.0];
        let opts = IntervalOptions {
            bootstrap_b: 40,
            bootstrap_seed: 5,
            ..Default::default()
        };
        let band = drift_band(DriftEstimator::Fm, DriftData::Iid(&d), &basis(), &grid, &opts).unwrap();
        let theta = fit_fm_iid(&d, &basis()).unwrap().theta;
        assert_eq!(band.grid, grid);
        for (i, &x) in grid.iter().enumerate() {
            assert!((band.estimate[i] - basis().eval_model(&theta, x).unwrap()).abs() < 1e-12);
            assert!(band.lower[i] <= band.upper[i]);
        }
        let again = drift_band(DriftEstimator::Fm, DriftData::Iid(&d), &basis(), &grid, &opts).unwrap();
        assert_eq!(band, again);
    }
}

//! Jackknife and nonparametric bootstrap over resampling units.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{IidDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

use super::report::{check_alpha, CiMethod, ConfidenceReport};

/// A dataset that can be rebuilt from a multiset of its resampling units.
pub trait Resample: Sync {
    fn units(&self) -> usize;
    fn subset(&self, indices: &[usize]) -> Self;
}

/// Rows are the units.
impl Resample for IidDataset {
    fn units(&self) -> usize {
        self.len()
    }

    fn subset(&self, indices: &[usize]) -> Self {
        self.select(indices)
    }
}

/// Whole paths are the units.
impl Resample for TimeSeriesDataset {
    fn units(&self) -> usize {
        self.n_paths()
    }

    fn subset(&self, indices: &[usize]) -> Self {
        self.select(indices)
    }
}

impl<T: Clone + Sync> Resample for Vec<T> {
    fn units(&self) -> usize {
        self.len()
    }

    fn subset(&self, indices: &[usize]) -> Self {
        indices.iter().map(|&i| self[i].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jackknife {
    pub theta_hat: Vec<f64>,
    pub leave_one_out: Vec<Vec<f64>>,
    pub variance: Vec<f64>,
    pub report: ConfidenceReport,
}

fn coordinate_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows[0].len();
    let mut m = vec![0.0; k];
    for r in rows {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|v| *v /= rows.len() as f64);
    m
}

fn check_lengths(rows: &[Vec<f64>], k: usize) -> Result<()> {
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::arg("estimator returned vectors of different lengths"));
    }
    Ok(())
}

/// Delete-one jackknife: `V = ((N-1)/N) Σ (θ̂_(-i) - θ̄)²` and `θ̂ ± z√V`.
pub fn jackknife<D, F>(data: &D, estimator: F, alpha: f64) -> Result<Jackknife>
where
    D: Resample,
    F: Fn(&D) -> Result<Vec<f64>> + Sync,
{
    check_alpha(alpha)?;
    let n = data.units();
    if n < 2 {
        return Err(Error::arg("jackknife needs at least two resampling units"));
    }
    let theta_hat = estimator(data)?;
    let leave_one_out = (0..n)
        .into_par_iter()
        .map(|i| {
            let idx: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            estimator(&data.subset(&idx)).map_err(|e| Error::Refit { index: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    check_lengths(&leave_one_out, theta_hat.len())?;
    let mean = coordinate_mean(&leave_one_out);
    let factor = (n - 1) as f64 / n as f64;
    let variance: Vec<f64> = (0..theta_hat.len())
        .map(|k| factor * leave_one_out.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>())
        .collect();
    let report = ConfidenceReport::symmetric(CiMethod::Jackknife, alpha, theta_hat.clone(), variance.clone())?;
    Ok(Jackknife { theta_hat, leave_one_out, variance, report })
}

/// Bootstrap replicate estimates; `thetas` holds the successful replicates in
/// replicate order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReplicates {
    pub thetas: Vec<Vec<f64>>,
    pub seed: u64,
    pub b_count: usize,
    /// Indices of replicates whose refit failed.
    pub failed: Vec<usize>,
}

impl BootstrapReplicates {
    pub fn dim(&self) -> usize {
        self.thetas.first().map_or(0, |r| r.len())
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.thetas.iter().map(|r| r[k]).collect()
    }

    /// Per-coordinate variance with `1/B` normalization.
    pub fn variance(&self) -> Vec<f64> {
        let mean = coordinate_mean(&self.thetas);
        let b = self.thetas.len() as f64;
        (0..self.dim())
            .map(|k| self.thetas.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / b)
            .collect()
    }
}

/// Fraction of failed refits tolerated before the bootstrap errors out.
pub const FAILURE_BUDGET: f64 = 0.1;

/// Draw `b` with-replacement resamples of the units; replicate `r` uses RNG
/// stream `r` of `seed`, so the result does not depend on scheduling.
pub fn bootstrap<D, F>(data: &D, estimator: F, b: usize, seed: u64) -> Result<BootstrapReplicates>
where
    D: Resample,
    F: Fn(&D) -> Result<Vec<f64>> + Sync,
{
    if b < 2 {
        return Err(Error::arg("bootstrap needs B >= 2"));
    }
    let n = data.units();
    if n == 0 {
        return Err(Error::arg("bootstrap of an empty dataset"));
    }
    let results: Vec<Result<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            estimator(&data.subset(&idx))
        })
        .collect();
    let mut thetas = Vec::with_capacity(b);
    let mut failed = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(t) => thetas.push(t),
            Err(_) => failed.push(r),
        }
    }
    let budget = (FAILURE_BUDGET * b as f64).floor() as usize;
    if failed.len() > budget || thetas.len() < 2 {
        return Err(Error::ResampleBudget { failed: failed.len(), total: b, budget });
    }
    let k = thetas[0].len();
    check_lengths(&thetas, k)?;
    Ok(BootstrapReplicates { thetas, seed, b_count: b, failed })
}

/// `θ̂ ± z_{α/2} √V_boot`.
pub fn bootstrap_standard_ci(theta_hat: &[f64], reps: &BootstrapReplicates, alpha: f64) -> Result<ConfidenceReport> {
    if theta_hat.len() != reps.dim() {
        return Err(Error::arg("theta length does not match the replicates"));
    }
    ConfidenceReport::symmetric(CiMethod::BootstrapStandard, alpha, theta_hat.to_vec(), reps.variance())
}

/// Quantile of sorted values by linear interpolation at 0-based position `(n-1)p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    sorted[lo] + t * (sorted[hi] - sorted[lo])
}

/// Empirical `α/2` and `1-α/2` quantiles of `values`.
pub fn percentile_bounds(values: &[f64], alpha: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile_sorted(&v, alpha / 2.0), quantile_sorted(&v, 1.0 - alpha / 2.0))
}

/// Percentile interval per coordinate; `theta_hat` fills the estimate column.
pub fn bootstrap_percentile_ci(theta_hat: &[f64], reps: &BootstrapReplicates, alpha: f64) -> Result<ConfidenceReport> {
    check_alpha(alpha)?;
    if theta_hat.len() != reps.dim() {
        return Err(Error::arg("theta length does not match the replicates"));
    }
    let (lower, upper) = (0..reps.dim()).map(|k| percentile_bounds(&reps.column(k), alpha)).unzip();
    Ok(ConfidenceReport {
        method: CiMethod::BootstrapPercentile,
        alpha,
        estimate: theta_hat.to_vec(),
        variance: None,
        lower,
        upper,
    })
}

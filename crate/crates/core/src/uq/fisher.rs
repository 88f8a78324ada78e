//! Fisher information pairs, batch means, and sandwich intervals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{potential_gradient_into, BasisSet};
use crate::dataset::{IidDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::estimators::{accumulate_rows, re_model_stats};
use crate::linalg::{guarded_inverse, symmetrized};
use crate::twoscale::Quadrature;

use super::report::{check_alpha, CiMethod, ConfidenceReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FisherKind {
    Iid,
    PathSpace,
}

/// Curvature-type (`f1`) and score-outer-product-type (`f2`) information.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherPair {
    pub f1: DMatrix<f64>,
    pub f2: DMatrix<f64>,
    pub kind: FisherKind,
}

impl FisherPair {
    /// `f1⁻¹ f2 f1⁻¹`, the per-observation sandwich covariance.
    pub fn sandwich(&self) -> Result<DMatrix<f64>> {
        sandwich_matrix(&self.f1, &self.f2)
    }
}

fn sandwich_matrix(f1: &DMatrix<f64>, f2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if f1.shape() != f2.shape() {
        return Err(Error::arg("Fisher matrices have different shapes"));
    }
    let inv = guarded_inverse(f1)?;
    Ok(symmetrized(&(&inv * f2 * &inv)))
}

/// `-(1/N) Σ ∇²_θ log μ̄^θ = 4 Cov_μ̄(∇_θ Ū)`, independent of the data.
pub fn fisher_f1_iid(theta: &[f64], quad: &Quadrature) -> Result<DMatrix<f64>> {
    let stats = re_model_stats(theta, quad)?;
    Ok(symmetrized(&stats.cov_grad) * 4.0)
}

/// `(1/N) Σ g_i g_iᵀ` with `g_i = -2∇Ū(X_i) + 2E_μ̄[∇Ū]`.
pub fn fisher_f2_iid(theta: &[f64], data: &IidDataset, quad: &Quadrature) -> Result<DMatrix<f64>> {
    if data.is_empty() {
        return Err(Error::arg("empty dataset"));
    }
    let k = theta.len();
    let stats = re_model_stats(theta, quad)?;
    let mut out = DMatrix::zeros(k, k);
    let mut g = vec![0.0; k];
    for x in data.cg_values() {
        potential_gradient_into(x, &mut g);
        let score = DVector::from_fn(k, |a, _| 2.0 * (stats.mean_grad[a] - g[a]));
        out += &score * score.transpose();
    }
    Ok(symmetrized(&(out / data.len() as f64)))
}

pub fn re_fisher_pair(theta: &[f64], data: &IidDataset, quad: &Quadrature) -> Result<FisherPair> {
    Ok(FisherPair {
        f1: fisher_f1_iid(theta, quad)?,
        f2: fisher_f2_iid(theta, data, quad)?,
        kind: FisherKind::Iid,
    })
}

/// Force-matching pair: `f1 = mean φφᵀ`, `f2 = mean r² φφᵀ` with residuals
/// `r_i = F_i - a(X_i;θ)`.
pub fn fm_fisher_pair(theta: &[f64], data: &IidDataset, basis: &BasisSet) -> Result<FisherPair> {
    if !data.has_forces() || data.force_dim() != 1 {
        return Err(Error::arg("force matching information needs scalar forces"));
    }
    let k = basis.len();
    if theta.len() != k {
        return Err(Error::arg("theta length does not match the basis"));
    }
    let f1 = accumulate_rows(data.len(), k, |i, row| {
        basis.eval_into(data.cg(i), row)?;
        Ok(0.0)
    })?
    .finish()?
    .gram;
    let f2 = accumulate_rows(data.len(), k, |i, row| {
        basis.eval_into(data.cg(i), row)?;
        let fitted: f64 = row.iter().zip(theta).map(|(p, t)| p * t).sum();
        let r = data.force(i).expect("checked")[0] - fitted;
        row.iter_mut().for_each(|v| *v *= r);
        Ok(0.0)
    })?
    .finish()?
    .gram;
    Ok(FisherPair { f1, f2, kind: FisherKind::Iid })
}

fn transitions(data: &TimeSeriesDataset) -> Vec<(usize, Vec<f64>)> {
    (0..data.n_paths()).map(|k| (k, data.cg_path(k).collect())).collect()
}

/// `Î₁ = h · mean φ(X_i)φ(X_i)ᵀ` over transitions (unit diffusion convention),
/// per-path means averaged with equal weights.
pub fn fisher_i1_ts(data: &TimeSeriesDataset, basis: &BasisSet) -> Result<DMatrix<f64>> {
    let h = data.time_step();
    let k = basis.len();
    let mut total = DMatrix::zeros(k, k);
    for (_, xs) in transitions(data) {
        let gram = accumulate_rows(xs.len() - 1, k, |i, row| {
            basis.eval_into(xs[i], row)?;
            Ok(0.0)
        })?
        .finish()?
        .gram;
        total += gram;
    }
    Ok(total * (h / data.n_paths() as f64))
}

/// Per-transition scores `∇_θ log q̄^θ = (ΔX_i - a(X_i;θ)h) φ(X_i)` of one path.
pub fn transition_scores(theta: &[f64], xs: &[f64], h: f64, basis: &BasisSet) -> Result<Vec<DVector<f64>>> {
    if xs.len() < 2 {
        return Err(Error::arg("a path needs at least two states"));
    }
    let k = basis.len();
    let mut phi = vec![0.0; k];
    xs.windows(2)
        .map(|w| {
            basis.eval_into(w[0], &mut phi)?;
            let drift: f64 = phi.iter().zip(theta).map(|(p, t)| p * t).sum();
            let r = w[1] - w[0] - drift * h;
            Ok(DVector::from_fn(k, |a, _| r * phi[a]))
        })
        .collect()
}

/// Default batch length `⌊√n⌋` for `n` scores.
pub fn default_batch_size(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// Batch-means estimate `(b/(a-1)) Σ_j (Ȳ_j - Ȳ)(Ȳ_j - Ȳ)ᵀ` of the long-run
/// covariance of a score sequence; `a = ⌊n/b⌋` batches, tail remainder dropped.
pub fn batch_means_covariance(scores: &[DVector<f64>], batch: Option<usize>) -> Result<DMatrix<f64>> {
    let n = scores.len();
    let k = scores.first().map(|s| s.len()).ok_or_else(|| Error::arg("no scores"))?;
    let b = batch.unwrap_or_else(|| default_batch_size(n));
    if b == 0 {
        return Err(Error::arg("batch length must be positive"));
    }
    let a = n / b;
    if a < 2 {
        return Err(Error::arg(format!(
            "batch means needs at least 2 batches; {n} scores with batch length {b} give {a}"
        )));
    }
    let means: Vec<DVector<f64>> = (0..a)
        .map(|j| {
            let mut m = DVector::zeros(k);
            for s in &scores[j * b..(j + 1) * b] {
                m += s;
            }
            m / b as f64
        })
        .collect();
    let grand = means.iter().fold(DVector::zeros(k), |acc, m| acc + m) / a as f64;
    let mut out = DMatrix::zeros(k, k);
    for m in &means {
        let d = m - &grand;
        out += &d * d.transpose();
    }
    Ok(symmetrized(&(out * (b as f64 / (a - 1) as f64))))
}

/// Batch-means `Σ̂` of the transition scores of a single stationary path.
pub fn batch_means_sigma(
    theta: &[f64],
    data: &TimeSeriesDataset,
    basis: &BasisSet,
    batch: Option<usize>,
) -> Result<DMatrix<f64>> {
    if data.n_paths() != 1 {
        return Err(Error::arg(format!(
            "batch means needs a single path, got {}",
            data.n_paths()
        )));
    }
    let xs: Vec<f64> = data.cg_path(0).collect();
    let scores = transition_scores(theta, &xs, data.time_step(), basis)?;
    batch_means_covariance(&scores, batch)
}

/// Path-space information pair `(Î₁, Σ̂_BM)` for one path.
pub fn path_fisher_pair(
    theta: &[f64],
    data: &TimeSeriesDataset,
    basis: &BasisSet,
    batch: Option<usize>,
) -> Result<FisherPair> {
    Ok(FisherPair {
        f1: fisher_i1_ts(data, basis)?,
        f2: batch_means_sigma(theta, data, basis, batch)?,
        kind: FisherKind::PathSpace,
    })
}

fn sandwich_report(theta: &[f64], f1: &DMatrix<f64>, f2: &DMatrix<f64>, n: usize, alpha: f64) -> Result<ConfidenceReport> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::arg("sample count must be positive"));
    }
    if theta.len() != f1.nrows() {
        return Err(Error::arg("theta length does not match the Fisher matrices"));
    }
    let s = sandwich_matrix(f1, f2)?;
    let variance = (0..theta.len()).map(|k| (s[(k, k)] / n as f64).max(0.0)).collect();
    ConfidenceReport::symmetric(CiMethod::Asymptotic, alpha, theta.to_vec(), variance)
}

/// Asymptotic interval with variance `diag(F̂₁⁻¹F̂₂F̂₁⁻¹)/N`.
pub fn sandwich_ci_iid(theta: &[f64], fisher: &FisherPair, n: usize, alpha: f64) -> Result<ConfidenceReport> {
    sandwich_report(theta, &fisher.f1, &fisher.f2, n, alpha)
}

/// Path-space interval with variance `diag(Î₁⁻¹Σ̂_BMÎ₁⁻¹)/(N-1)`;
/// `n_transitions` is `N - 1`.
pub fn sandwich_ci_ts(
    theta: &[f64],
    i1: &DMatrix<f64>,
    sigma_bm: &DMatrix<f64>,
    n_transitions: usize,
    alpha: f64,
) -> Result<ConfidenceReport> {
    sandwich_report(theta, i1, sigma_bm, n_transitions, alpha)
}

/// `‖F̂₁ - F̂₂‖_F / ‖F̂₁‖_F`.
pub fn f1_f2_divergence(fisher: &FisherPair) -> f64 {
    (&fisher.f1 - &fisher.f2).norm() / fisher.f1.norm()
}

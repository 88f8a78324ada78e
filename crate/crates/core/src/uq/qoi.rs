//! Quantities of interest: delta method, bootstrap bands, relative spread.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::fmt17;
use crate::error::{Error, Result};
use crate::linalg::guarded_inverse;

use super::fisher::FisherPair;
use super::report::check_alpha;
use super::resample::{percentile_bounds, BootstrapReplicates};

/// Which covariance of θ̂ feeds the delta method.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaCovariance {
    /// `F̂₁⁻¹F̂₂F̂₁⁻¹ / N`.
    #[default]
    Sandwich,
    /// `F̂₁⁻¹` with no sample-size scaling, the literal textbook form.
    InverseF1,
}

pub fn delta_covariance(fisher: &FisherPair, n: usize, kind: DeltaCovariance) -> Result<DMatrix<f64>> {
    match kind {
        DeltaCovariance::Sandwich => {
            if n == 0 {
                return Err(Error::arg("sample count must be positive"));
            }
            Ok(fisher.sandwich()? / n as f64)
        }
        DeltaCovariance::InverseF1 => guarded_inverse(&fisher.f1),
    }
}

/// `sqrt(∇gᵀ Σ ∇g)`.
pub fn delta_method_se(grad_g: &[f64], cov_theta: &DMatrix<f64>) -> Result<f64> {
    let k = grad_g.len();
    if cov_theta.shape() != (k, k) {
        return Err(Error::arg("gradient and covariance dimensions differ"));
    }
    let g = DVector::from_column_slice(grad_g);
    Ok((g.dot(&(cov_theta * &g))).max(0.0).sqrt())
}

/// Pointwise bootstrap band of a scalar function of θ over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QoiBand {
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub estimate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Replicate standard deviation (`1/B` normalization) per grid point.
    pub std: Vec<f64>,
}

impl QoiBand {
    pub fn contains(&self, i: usize, value: f64) -> bool {
        self.lower[i] <= value && value <= self.upper[i]
    }

    /// CSV `grid,lower,estimate,upper`.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        writeln!(w, "grid,lower,estimate,upper")?;
        for i in 0..self.grid.len() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt17(self.grid[i]),
                fmt17(self.lower[i]),
                fmt17(self.estimate[i]),
                fmt17(self.upper[i])
            )?;
        }
        Ok(())
    }
}

/// Apply `g(θ, x)` to every replicate and take percentile bounds per grid point.
pub fn qoi_bootstrap_ci<G>(
    grid: &[f64],
    theta_hat: &[f64],
    reps: &BootstrapReplicates,
    g: G,
    alpha: f64,
) -> Result<QoiBand>
where
    G: Fn(&[f64], f64) -> Result<f64> + Sync,
{
    check_alpha(alpha)?;
    if reps.thetas.is_empty() {
        return Err(Error::arg("no bootstrap replicates"));
    }
    let estimate = grid.iter().map(|&x| g(theta_hat, x)).collect::<Result<Vec<_>>>()?;
    let values: Vec<Vec<f64>> = reps
        .thetas
        .par_iter()
        .map(|t| grid.iter().map(|&x| g(t, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let b = values.len() as f64;
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    let mut std = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let col: Vec<f64> = values.iter().map(|v| v[i]).collect();
        let (lo, hi) = percentile_bounds(&col, alpha);
        lower.push(lo);
        upper.push(hi);
        let m = col.iter().sum::<f64>() / b;
        std.push((col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / b).sqrt());
    }
    Ok(QoiBand { alpha, grid: grid.to_vec(), estimate, lower, upper, std })
}

/// Signed `σ_k / θ_k`; `None` where `|θ_k| < 1e-12`.
pub fn rstd(theta: &[f64], sigma: &[f64]) -> Result<Vec<Option<f64>>> {
    if theta.len() != sigma.len() {
        return Err(Error::arg("theta and sigma lengths differ"));
    }
    Ok(theta
        .iter()
        .zip(sigma)
        .map(|(&t, &s)| if t.abs() < 1e-12 { None } else { Some(s / t) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uq::{bootstrap_percentile_ci, FisherKind};

    #[test]
    fn delta_projection_and_linear() {
        let cov = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        assert!((delta_method_se(&[0.0, 1.0], &cov).unwrap() - 0.3).abs() < 1e-15);
        let cov = DMatrix::<f64>::identity(3, 3) / 25.0;
        let se = delta_method_se(&[1.0, 2.0, 2.0], &cov).unwrap();
        assert!((se - 3.0 / 5.0).abs() < 1e-15);
        assert!(delta_method_se(&[1.0], &cov).is_err());
    }

    #[test]
    fn delta_covariance_options() {
        let f1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let pair = FisherPair { f1: f1.clone(), f2: f1.clone(), kind: FisherKind::Iid };
        let s = delta_covariance(&pair, 10, DeltaCovariance::Sandwich).unwrap();
        assert!((s[(0, 0)] - 0.05).abs() < 1e-15 && (s[(1, 1)] - 0.025).abs() < 1e-15);
        let l = delta_covariance(&pair, 10, DeltaCovariance::InverseF1).unwrap();
        assert!((l[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_qoi_reduces_to_percentile() {
        let reps = BootstrapReplicates {
            thetas: (0..40).map(|i| vec![(i as f64 * 0.7).sin()]).collect(),
            seed: 0,
            b_count: 40,
            failed: vec![],
        };
        let band = qoi_bootstrap_ci(&[0.0], &[0.1], &reps, |t, _| Ok(t[0]), 0.1).unwrap();
        let ci = bootstrap_percentile_ci(&[0.1], &reps, 0.1).unwrap();
        assert_eq!((band.lower[0], band.upper[0]), (ci.lower[0], ci.upper[0]));
        let mut buf = Vec::new();
        band.write_csv(&mut buf, &[]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("grid,lower,estimate,upper\n0.0,"));
    }

    #[test]
    fn rstd_signs_and_markers() {
        assert_eq!(rstd(&[2.0], &[1.0]).unwrap(), vec![Some(0.5)]);
        assert_eq!(rstd(&[-2.0], &[1.0]).unwrap(), vec![Some(-0.5)]);
        assert_eq!(rstd(&[0.0], &[1.0]).unwrap(), vec![None]);
    }
}

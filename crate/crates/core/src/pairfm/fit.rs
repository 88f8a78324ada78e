use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::dataset::fmt17;
use crate::error::{Error, Result};
use crate::estimate::{Method, ParamEstimate};
use crate::linalg::{solve_normal_equations, tree_reduce, LinearSystem, NormalAccumulator};
use crate::uq::{bootstrap, jackknife, qoi_bootstrap_ci, BootstrapReplicates, QoiBand};

use super::config::ParticleConfig;
use super::neighbors::neighbor_pairs;

fn spline_domain(basis: &BasisSet) -> Result<(f64, f64)> {
    basis
        .domain()
        .ok_or_else(|| Error::Unsupported("pair potentials need a spline basis".into()))
}

/// `u(r;θ)`, zero beyond the basis domain.
pub fn pair_potential(basis: &BasisSet, theta: &[f64], r: f64) -> Result<f64> {
    let (_, hi) = spline_domain(basis)?;
    if r > hi {
        return Ok(0.0);
    }
    basis.eval_model(theta, r)
}

/// `du/dr`, zero beyond the basis domain.
pub fn pair_potential_deriv(basis: &BasisSet, theta: &[f64], r: f64) -> Result<f64> {
    let (_, hi) = spline_domain(basis)?;
    if r > hi {
        return Ok(0.0);
    }
    basis.eval_model_deriv(theta, r)
}

/// Exact pairwise forces `F_i = Σ_j -u'(r_ij) û_ij`.
pub fn pair_forces(config: &ParticleConfig, basis: &BasisSet, theta: &[f64], cutoff: f64) -> Result<Vec<[f64; 3]>> {
    let pl = neighbor_pairs(config, cutoff)?;
    let mut f = vec![[0.0; 3]; config.len()];
    for p in &pl.pairs {
        let mag = -pair_potential_deriv(basis, theta, p.r)?;
        for c in 0..3 {
            f[p.i][c] += mag * p.unit[c];
            f[p.j][c] -= mag * p.unit[c];
        }
    }
    Ok(f)
}

/// Design matrix of one configuration: row `3i + c` is component `c` of the
/// model force on particle `i` per unit of each coefficient.
pub(crate) fn config_design(config: &ParticleConfig, basis: &BasisSet, cutoff: f64) -> Result<(DMatrix<f64>, usize)> {
    let (_, hi) = spline_domain(basis)?;
    let k = basis.len();
    let m = config.len();
    let pl = neighbor_pairs(config, cutoff)?;
    let mut design = DMatrix::<f64>::zeros(3 * m, k);
    let mut dphi = vec![0.0; k];
    for p in &pl.pairs {
        if p.r > hi {
            continue;
        }
        basis.eval_deriv_into(p.r, &mut dphi)?;
        for (col, &d) in dphi.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for c in 0..3 {
                let v = d * p.unit[c];
                design[(3 * p.i + c, col)] -= v;
                design[(3 * p.j + c, col)] += v;
            }
        }
    }
    Ok((design, pl.pairs.len()))
}

/// Normal equations of one configuration: `3m` rows, one per force component.
pub fn config_system(config: &ParticleConfig, basis: &BasisSet, cutoff: f64) -> Result<(LinearSystem, usize)> {
    let k = basis.len();
    let (design, n_pairs) = config_design(config, basis, cutoff)?;
    let mut acc = NormalAccumulator::new(k);
    let mut row = vec![0.0; k];
    for (i, f) in config.forces().iter().enumerate() {
        for c in 0..3 {
            for (col, v) in row.iter_mut().enumerate() {
                *v = design[(3 * i + c, col)];
            }
            acc.add_row(&row, f[c]);
        }
    }
    Ok((acc.finish()?, n_pairs))
}

/// Per-configuration normal equations, in input order.
pub fn pair_fm_systems(configs: &[ParticleConfig], basis: &BasisSet, cutoff: f64) -> Result<Vec<LinearSystem>> {
    if configs.is_empty() {
        return Err(Error::arg("no configurations"));
    }
    let parts = configs
        .par_iter()
        .map(|c| config_system(c, basis, cutoff))
        .collect::<Result<Vec<_>>>()?;
    if parts.iter().all(|(_, n)| *n == 0) {
        return Err(Error::Conditioning {
            smallest: 0.0,
            largest: 0.0,
            empty_columns: (0..basis.len()).collect(),
        });
    }
    Ok(parts.into_iter().map(|(s, _)| s).collect())
}

/// Pool per-configuration systems, weighting by row count.
pub fn pool_systems(systems: &[LinearSystem]) -> Result<LinearSystem> {
    let weights: Vec<f64> = systems.iter().map(|s| s.n_rows as f64).collect();
    let scaled: Vec<(LinearSystem, f64)> = systems.iter().cloned().zip(weights).collect();
    // fixed-order pairwise sums of weighted Gram/moment terms
    let total: f64 = scaled.iter().map(|(_, w)| w).sum();
    let reduced = tree_reduce(
        scaled
            .into_iter()
            .map(|(s, w)| LinearSystem { gram: s.gram * w, moment: s.moment * w, n_rows: s.n_rows })
            .collect(),
        |a, b| LinearSystem { gram: a.gram + &b.gram, moment: a.moment + &b.moment, n_rows: a.n_rows + b.n_rows },
    )
    .ok_or_else(|| Error::arg("no systems to pool"))?;
    Ok(LinearSystem { gram: reduced.gram / total, moment: reduced.moment / total, n_rows: reduced.n_rows })
}

/// Pooled normal equations over all force components of all configurations.
pub fn assemble_pair_fm(configs: &[ParticleConfig], basis: &BasisSet, cutoff: f64) -> Result<LinearSystem> {
    pool_systems(&pair_fm_systems(configs, basis, cutoff)?)
}

pub fn fit_pair_potential(configs: &[ParticleConfig], basis: &BasisSet, cutoff: f64) -> Result<ParamEstimate> {
    let sys = assemble_pair_fm(configs, basis, cutoff)?;
    let theta = solve_normal_equations(&sys)?;
    Ok(ParamEstimate::closed_form(theta.as_slice().to_vec(), Method::PairFm, configs.len()))
}

// the resampling traits hand out the container type itself
#[allow(clippy::ptr_arg)]
fn solve_pooled(systems: &Vec<LinearSystem>) -> Result<Vec<f64>> {
    Ok(solve_normal_equations(&pool_systems(systems)?)?.as_slice().to_vec())
}

/// Bootstrap and jackknife spread of the fitted potential curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialBand {
    pub theta_hat: Vec<f64>,
    /// Percentile band with the bootstrap standard deviation curve.
    pub bootstrap: QoiBand,
    /// Delete-one-configuration jackknife standard deviation on the same grid.
    pub jackknife_std: Vec<f64>,
    /// Pointwise mean of the replicate curves.
    pub replicate_mean: Vec<f64>,
    pub replicates: BootstrapReplicates,
}

/// Resample whole configurations `b` times and band `u(r;θ)` over `grid`.
pub fn potential_band(
    configs: &[ParticleConfig],
    basis: &BasisSet,
    cutoff: f64,
    b: usize,
    alpha: f64,
    grid: &[f64],
    seed: u64,
) -> Result<PotentialBand> {
    let systems = pair_fm_systems(configs, basis, cutoff)?;
    let theta_hat = solve_pooled(&systems)?;
    let replicates = bootstrap(&systems, solve_pooled, b, seed)?;
    let u = |t: &[f64], r: f64| pair_potential(basis, t, r);
    let band = qoi_bootstrap_ci(grid, &theta_hat, &replicates, u, alpha)?;
    let replicate_mean = grid
        .iter()
        .map(|&r| {
            let vals = replicates.thetas.iter().map(|t| u(t, r)).collect::<Result<Vec<_>>>()?;
            Ok(vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = |s: &Vec<LinearSystem>| -> Result<Vec<f64>> {
        let t = solve_pooled(s)?;
        grid.iter().map(|&r| u(&t, r)).collect()
    };
    let jk = jackknife(&systems, curve, alpha)?;
    let jackknife_std = jk.variance.iter().map(|v| v.sqrt()).collect();
    Ok(PotentialBand { theta_hat, bootstrap: band, jackknife_std, replicate_mean, replicates })
}

/// Potential curve CSV `r,u` or, with a band, `r,u,lower,upper`.
pub fn write_potential_csv<W: Write>(
    mut w: W,
    grid: &[f64],
    u: &[f64],
    band: Option<&QoiBand>,
    meta: &[String],
) -> Result<()> {
    if grid.len() != u.len() || band.is_some_and(|b| b.grid.len() != grid.len()) {
        return Err(Error::arg("grid, curve and band lengths differ"));
    }
    for m in meta {
        writeln!(w, "# {m}")?;
    }
    match band {
        None => {
            writeln!(w, "r,u")?;
            for (r, v) in grid.iter().zip(u) {
                writeln!(w, "{},{}", fmt17(*r), fmt17(*v))?;
            }
        }
        Some(b) => {
            writeln!(w, "r,u,lower,upper")?;
            for i in 0..grid.len() {
                writeln!(w, "{},{},{},{}", fmt17(grid[i]), fmt17(u[i]), fmt17(b.lower[i]), fmt17(b.upper[i]))?;
            }
        }
    }
    Ok(())
}

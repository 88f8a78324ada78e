//! The CG invariant density `μ̄^θ(x) = exp(-2Ū(x;θ)) / Z^θ` on a quadrature grid.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{antiderivative_potential, BasisSet};
use crate::dataset::fmt17;
use crate::error::{Error, Result};

/// Uniform quadrature window `[-half_width, half_width]` with `points` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub half_width: f64,
    pub points: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            half_width: 8.0,
            points: 4001,
        }
    }
}

impl Quadrature {
    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.half_width, self.points)
    }
}

pub fn uniform_grid(half_width: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    let step = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|i| -half_width + step * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoid integral of `exp(-2Ū)` before normalization, i.e. `Z^θ`.
    pub normalization: f64,
    pub log_z: f64,
}

fn trapezoid(xs: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    xs.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (f(i) + f(i + 1)))
        .sum()
}

/// Density of the monomial-drift CG model with coefficients `theta`.
pub fn cg_invariant_density(theta: &[f64], grid: &[f64]) -> Result<DensityGrid> {
    if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("quadrature grid must be strictly increasing with ≥ 3 points"));
    }
    let basis = BasisSet::monomial(theta.len())?;
    let exponent = grid
        .iter()
        .map(|&x| antiderivative_potential(&basis, theta, x).map(|u| -2.0 * u))
        .collect::<Result<Vec<f64>>>()?;
    let max = exponent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Integrability { edge_ratio: f64::INFINITY });
    }
    let mut values: Vec<f64> = exponent.iter().map(|e| (e - max).exp()).collect();
    let edge_ratio = values[0].max(values[values.len() - 1]);
    if edge_ratio > 1e-12 {
        return Err(Error::Integrability { edge_ratio });
    }
    let mass = trapezoid(grid, |i| values[i]);
    for v in values.iter_mut() {
        *v /= mass;
    }
    let log_z = max + mass.ln();
    Ok(DensityGrid {
        xs: grid.to_vec(),
        values,
        normalization: log_z.exp(),
        log_z,
    })
}

impl DensityGrid {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.xs, |i| self.values[i])
    }

    /// `E_μ̄[f]` by the trapezoid rule.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let fx: Vec<f64> = self.xs.iter().map(|&x| f(x)).collect();
        trapezoid(&self.xs, |i| self.values[i] * fx[i])
    }

    pub fn mode(&self) -> f64 {
        let i = (0..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        self.xs[i]
    }

    /// Cumulative trapezoid distribution at the grid nodes, ending at 1.
    pub fn cdf(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.xs.len());
        let mut acc = 0.0;
        c.push(0.0);
        for i in 1..self.xs.len() {
            acc += 0.5 * (self.xs[i] - self.xs[i - 1]) * (self.values[i] + self.values[i - 1]);
            c.push(acc);
        }
        let total = acc;
        c.iter_mut().for_each(|v| *v /= total);
        c
    }

    /// Draw `n` samples by inverting the piecewise-linear CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let cdf = self.cdf();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let j = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[j - 1], cdf[j]);
                let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                self.xs[j - 1] + t * (self.xs[j] - self.xs[j - 1])
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        writeln!(w, "x,density")?;
        for (x, v) in self.xs.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt17(*x), fmt17(*v))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    const HARMONIC: [f64; 5] = [0.0, -1.0, 0.0, 0.0, 0.0];

    #[test]
    fn harmonic_is_gaussian_with_variance_half() {
        let d = cg_invariant_density(&HARMONIC, &uniform_grid(8.0, 4001)).unwrap();
        let mid = d.xs.len() / 2;
        assert!((d.values[mid] - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-6);
        assert!((d.integral() - 1.0).abs() < 1e-8);
        assert!((d.log_z - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-10);
        assert!((d.expect(|x| x * x) - 0.5).abs() < 1e-10);
        assert!((d.expect(|x| x.powi(4)) - 0.75).abs() < 1e-10);
        assert!(d.values.iter().all(|&v| v >= 0.0));
        assert_eq!(d.mode(), 0.0);
    }

    #[test]
    fn inverted_parabola_is_not_integrable() {
        let err = cg_invariant_density(&[0.0, 1.0, 0.0, 0.0, 0.0], &uniform_grid(8.0, 4001)).unwrap_err();
        assert!(matches!(err, Error::Integrability { .. }));
    }

    #[test]
    fn grid_refinement_is_converged() {
        let theta = [0.02, -0.98, 0.03, -0.06, 0.0001];
        let a = cg_invariant_density(&theta, &uniform_grid(8.0, 4001)).unwrap();
        let b = cg_invariant_density(&theta, &uniform_grid(8.0, 8001)).unwrap();
        assert!((a.log_z - b.log_z).abs() < 1e-8);
    }

    #[test]
    fn sampler_reproduces_moments() {
        let d = cg_invariant_density(&HARMONIC, &uniform_grid(8.0, 4001)).unwrap();
        let xs = d.sample(&mut stream_rng(5, 0), 200_000);
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        // sd of the second-moment estimate is sqrt(2)*0.5/sqrt(N) ≈ 0.0016
        assert!((m2 - 0.5).abs() < 0.006, "{m2}");
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{antiderivative_potential, potential_gradient_into, BasisKind, BasisSet};
use crate::dataset::IidDataset;
use crate::error::{Error, Result};
use crate::estimate::{Method, ParamEstimate};
use crate::twoscale::{cg_invariant_density, DensityGrid, Quadrature};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Starting point; must give a normalizable density. `None` starts from `-x`.
    pub theta0: Option<Vec<f64>>,
    pub quad: Quadrature,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 50,
            grad_tol: 1e-8,
            theta0: None,
            quad: Quadrature::default(),
        }
    }
}

/// Moments of `∇_θ Ū` under the model density at θ.
#[derive(Clone, Debug)]
pub struct ReModelStats {
    pub density: DensityGrid,
    pub mean_grad: DVector<f64>,
    pub cov_grad: DMatrix<f64>,
}

pub fn re_model_stats(theta: &[f64], quad: &Quadrature) -> Result<ReModelStats> {
    let k = theta.len();
    let density = cg_invariant_density(theta, &quad.grid())?;
    let xs = &density.xs;
    let w: Vec<f64> = (0..xs.len())
        .map(|i| {
            let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
            let right = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { 0.0 };
            0.5 * (left + right) * density.values[i]
        })
        .collect();
    let mut mean = DVector::zeros(k);
    let mut second = DMatrix::zeros(k, k);
    let mut g = vec![0.0; k];
    for (&x, &wi) in xs.iter().zip(&w) {
        potential_gradient_into(x, &mut g);
        for a in 0..k {
            mean[a] += wi * g[a];
            for b in 0..=a {
                second[(a, b)] += wi * g[a] * g[b];
            }
        }
    }
    second.fill_upper_triangle_with_lower_triangle();
    let cov_grad = second - &mean * mean.transpose();
    Ok(ReModelStats { density, mean_grad: mean, cov_grad })
}

fn check_monomial(data: &IidDataset, basis: &BasisSet) -> Result<()> {
    if basis.kind() != BasisKind::Monomial {
        return Err(Error::Unsupported(
            "relative entropy minimization needs the monomial drift basis".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::arg("empty dataset"));
    }
    Ok(())
}

/// `L(θ) = -(2/N) Σ Ū(X_i;θ) - log Z^θ`; RE minimization maximizes it.
pub fn re_objective(theta: &[f64], data: &IidDataset, quad: &Quadrature) -> Result<f64> {
    let basis = BasisSet::monomial(theta.len())?;
    check_monomial(data, &basis)?;
    let mut sum = 0.0;
    for x in data.cg_values() {
        sum += antiderivative_potential(&basis, theta, x)?;
    }
    let density = cg_invariant_density(theta, &quad.grid())?;
    Ok(-2.0 * sum / data.len() as f64 - density.log_z)
}

fn data_mean_grad(data: &IidDataset, k: usize) -> DVector<f64> {
    let mut s = DVector::zeros(k);
    let mut g = vec![0.0; k];
    for x in data.cg_values() {
        potential_gradient_into(x, &mut g);
        for (a, v) in g.iter().enumerate() {
            s[a] += v;
        }
    }
    s / data.len() as f64
}

/// `∇L(θ) = -2·mean ∇Ū(X_i) + 2 E_μ̄[∇Ū]`.
pub fn re_gradient(theta: &[f64], data: &IidDataset, quad: &Quadrature) -> Result<DVector<f64>> {
    let stats = re_model_stats(theta, quad)?;
    Ok((stats.mean_grad - data_mean_grad(data, theta.len())) * 2.0)
}

/// One accepted Newton iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReIterate {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub grad_inf: f64,
    pub step: f64,
}

const MAX_HALVINGS: usize = 30;

/// Damped Newton ascent on `L(θ)` with Hessian `-4 Cov_μ̄(∇Ū)`.
pub fn fit_re_iid(data: &IidDataset, basis: &BasisSet, opts: &NewtonOptions) -> Result<ParamEstimate> {
    fit_re_iid_traced(data, basis, opts).map(|(e, _)| e)
}

pub fn fit_re_iid_traced(
    data: &IidDataset,
    basis: &BasisSet,
    opts: &NewtonOptions,
) -> Result<(ParamEstimate, Vec<ReIterate>)> {
    check_monomial(data, basis)?;
    let k = basis.len();
    let mut theta = match &opts.theta0 {
        Some(t) if t.len() != k => {
            return Err(Error::arg(format!("theta0 has {} entries, basis has {k}", t.len())))
        }
        Some(t) => DVector::from_column_slice(t),
        None => {
            if k < 2 {
                return Err(Error::arg("relative entropy needs K >= 2 for a confining default start"));
            }
            let mut t = DVector::zeros(k);
            t[1] = -1.0;
            t
        }
    };
    let s = data_mean_grad(data, k);
    let objective = |stats: &ReModelStats, th: &DVector<f64>| -2.0 * th.dot(&s) - stats.density.log_z;

    let mut stats = re_model_stats(theta.as_slice(), &opts.quad)?;
    let mut obj = objective(&stats, &theta);
    let mut warnings = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let grad = (&stats.mean_grad - &s) * 2.0;
        if grad.amax() < opts.grad_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            warnings.push(format!(
                "Newton iteration stopped after {} steps with |grad|_inf = {:.3e}",
                opts.max_iter,
                grad.amax()
            ));
            break;
        }
        let hess = (&stats.cov_grad + stats.cov_grad.transpose()) * 2.0;
        let dir = match hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => {
                warnings.push(format!(
                    "iteration {iterations}: curvature not positive definite, took a gradient step"
                ));
                grad.clone()
            }
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = &theta + &dir * step;
            if let Ok(cs) = re_model_stats(cand.as_slice(), &opts.quad) {
                let co = objective(&cs, &cand);
                if co.is_finite() && co >= obj - 1e-13 * obj.abs().max(1.0) {
                    accepted = Some((cand, cs, co));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, cs, co)) => {
                theta = cand;
                stats = cs;
                obj = co;
                trace.push(ReIterate {
                    theta: theta.as_slice().to_vec(),
                    objective: obj,
                    grad_inf: ((&stats.mean_grad - &s) * 2.0).amax(),
                    step,
                });
            }
            None => {
                warnings.push(format!(
                    "line search failed after {MAX_HALVINGS} halvings at |grad|_inf = {:.3e}",
                    grad.amax()
                ));
                break;
            }
        }
    }
    let est = ParamEstimate {
        theta: theta.as_slice().to_vec(),
        method: Method::ReIid,
        n_samples: data.len(),
        seed: None,
        converged,
        warnings,
        iterations: Some(iterations),
    };
    Ok((est, trace))
}

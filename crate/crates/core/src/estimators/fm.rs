use crate::basis::BasisSet;
use crate::dataset::{IidDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::estimate::{Method, ParamEstimate};
use crate::linalg::{solve_normal_equations, LinearSystem};

use super::accumulate_rows;

fn require_scalar_forces(d: usize) -> Result<()> {
    if d != 1 {
        return Err(Error::arg(format!(
            "drift force matching needs scalar force observations, got dimension {d}"
        )));
    }
    Ok(())
}

/// Normal equations of `min (1/N) Σ |F_i - Σ_k θ_k φ_k(X_i)|²`.
pub fn fm_system_iid(data: &IidDataset, basis: &BasisSet) -> Result<LinearSystem> {
    if !data.has_forces() {
        return Err(Error::arg("force matching requires force observations"));
    }
    require_scalar_forces(data.force_dim())?;
    accumulate_rows(data.len(), basis.len(), |i, row| {
        basis.eval_into(data.cg(i), row)?;
        Ok(data.force(i).expect("checked above")[0])
    })?
    .finish()
}

pub fn fit_fm_iid(data: &IidDataset, basis: &BasisSet) -> Result<ParamEstimate> {
    let sys = fm_system_iid(data, basis)?;
    let theta = solve_normal_equations(&sys)?;
    Ok(ParamEstimate::closed_form(theta.as_slice().to_vec(), Method::FmIid, data.len()))
}

/// Per-path normal equations (`1/N_t` over all recorded points) averaged over paths.
pub fn fm_system_ts(data: &TimeSeriesDataset, basis: &BasisSet) -> Result<LinearSystem> {
    if data.force_dim() == 0 {
        return Err(Error::arg("force matching on paths requires recorded forces"));
    }
    require_scalar_forces(data.force_dim())?;
    let systems = (0..data.n_paths())
        .map(|k| {
            let xs: Vec<f64> = data.cg_path(k).collect();
            let fs: Vec<f64> = data.force_path(k).expect("force_dim > 0").collect();
            accumulate_rows(xs.len(), basis.len(), |i, row| {
                basis.eval_into(xs[i], row)?;
                Ok(fs[i])
            })?
            .finish()
        })
        .collect::<Result<Vec<_>>>()?;
    LinearSystem::weighted_mean(&systems, &vec![1.0; systems.len()])
}

pub fn fit_fm_ts(data: &TimeSeriesDataset, basis: &BasisSet) -> Result<ParamEstimate> {
    let sys = fm_system_ts(data, basis)?;
    let theta = solve_normal_equations(&sys)?;
    Ok(ParamEstimate::closed_form(theta.as_slice().to_vec(), Method::FmTs, data.total_states()))
}

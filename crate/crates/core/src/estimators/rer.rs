use crate::basis::BasisSet;
use crate::dataset::TimeSeriesDataset;
use crate::error::Result;
use crate::estimate::{Method, ParamEstimate};
use crate::linalg::{solve_normal_equations, LinearSystem};

use super::accumulate_rows;

/// Paths spanning less time than this are flagged: the Euler–Maruyama
/// likelihood needs many relaxation times to pin down the drift.
pub const SHORT_SERIES_TIME: f64 = 50.0;

/// Normal equations of `min (1/N_p) Σ_k (1/(N_t-1)) Σ_i |ΔX_i - a(X_i;θ) h|²`.
pub fn rer_system(data: &TimeSeriesDataset, basis: &BasisSet) -> Result<LinearSystem> {
    let h = data.time_step();
    let systems = (0..data.n_paths())
        .map(|k| {
            let xs: Vec<f64> = data.cg_path(k).collect();
            accumulate_rows(xs.len() - 1, basis.len(), |i, row| {
                basis.eval_into(xs[i], row)?;
                row.iter_mut().for_each(|v| *v *= h);
                Ok(xs[i + 1] - xs[i])
            })?
            .finish()
        })
        .collect::<Result<Vec<_>>>()?;
    LinearSystem::weighted_mean(&systems, &vec![1.0; systems.len()])
}

/// Relative entropy rate (one path) or path-space relative entropy (several
/// paths) under the Euler–Maruyama transition density; a linear least-squares
/// problem for drifts that are linear in θ.
pub fn fit_rer(data: &TimeSeriesDataset, basis: &BasisSet) -> Result<ParamEstimate> {
    let sys = rer_system(data, basis)?;
    let theta = solve_normal_equations(&sys)?;
    let method = if data.n_paths() == 1 { Method::Rer } else { Method::Psre };
    let mut est = ParamEstimate::closed_form(theta.as_slice().to_vec(), method, data.total_states());
    let h = data.time_step();
    let short = (0..data.n_paths())
        .filter(|&k| data.path_len(k) as f64 * h < SHORT_SERIES_TIME)
        .count();
    if short > 0 {
        est.warnings.push(format!(
            "short series: {short} of {} paths span less than {SHORT_SERIES_TIME} time units; \
             the estimate may be strongly biased",
            data.n_paths()
        ));
    }
    Ok(est)
}

//! The slow/fast diffusion benchmark
//!
//! ```text
//! dX = -Y dt + dW¹
//! dY = -ε⁻¹ (Y - X) dt + ε^(-1/2) dW²
//! ```
//!
//! integrated by explicit Euler–Maruyama. As ε → 0 the slow variable follows
//! `dX = -X dt + dW`, so the reference drift coefficients are `(0, -1, 0, 0, 0)`.

mod density;

pub use density::{cg_invariant_density, uniform_grid, DensityGrid, Quadrature};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{IidDataset, TimeSeriesDataset, Trajectory};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

/// Drift coefficients of the averaged (ε → 0) dynamics for the quartic family.
pub const THETA_STAR: [f64; 5] = [0.0, -1.0, 0.0, 0.0, 0.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoScaleParams {
    pub epsilon: f64,
    /// Integration step; must not exceed ε/2.
    pub h_fine: f64,
    pub x0: f64,
    pub y0: f64,
    pub seed: u64,
    /// Time discarded before anything is recorded (paths and i.i.d. samples).
    pub burn_in_time: f64,
    /// Drop both noise terms (diagnostic).
    pub noiseless: bool,
}

impl Default for TwoScaleParams {
    fn default() -> Self {
        TwoScaleParams::new(0.005, 0)
    }
}

impl TwoScaleParams {
    /// ε with `h_fine = ε/10` and a 100 time-unit burn-in.
    pub fn new(epsilon: f64, seed: u64) -> Self {
        TwoScaleParams {
            epsilon,
            h_fine: epsilon / 10.0,
            x0: 0.0,
            y0: 0.0,
            seed,
            burn_in_time: 100.0,
            noiseless: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Configuration(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.h_fine > 0.0) {
            return Err(Error::Configuration(format!("h_fine must be positive, got {}", self.h_fine)));
        }
        if self.h_fine > self.epsilon / 2.0 {
            return Err(Error::Configuration(format!(
                "explicit stepping is unstable: h_fine = {} exceeds epsilon/2 = {}",
                self.h_fine,
                self.epsilon / 2.0
            )));
        }
        if !(self.burn_in_time >= 0.0) {
            return Err(Error::Configuration("burn-in time must be non-negative".into()));
        }
        Ok(())
    }

    fn steps_for(&self, time: f64) -> usize {
        (time / self.h_fine).round() as usize
    }
}

/// Euler–Maruyama integrator for one path.
pub struct TwoScaleStepper {
    pub x: f64,
    pub y: f64,
    h: f64,
    sqrt_h: f64,
    inv_eps: f64,
    fast_noise: f64,
    noiseless: bool,
    rng: StreamRng,
}

impl TwoScaleStepper {
    pub fn new(params: &TwoScaleParams, stream: u64) -> Result<Self> {
        params.validate()?;
        Ok(TwoScaleStepper {
            x: params.x0,
            y: params.y0,
            h: params.h_fine,
            sqrt_h: params.h_fine.sqrt(),
            inv_eps: 1.0 / params.epsilon,
            fast_noise: params.h_fine.sqrt() / params.epsilon.sqrt(),
            noiseless: params.noiseless,
            rng: stream_rng(params.seed, stream),
        })
    }

    #[inline]
    pub fn step(&mut self) {
        let (xi1, xi2): (f64, f64) = if self.noiseless {
            (0.0, 0.0)
        } else {
            (self.rng.sample(StandardNormal), self.rng.sample(StandardNormal))
        };
        let (x, y) = (self.x, self.y);
        self.x = x - y * self.h + self.sqrt_h * xi1;
        self.y = y - self.inv_eps * (y - x) * self.h + self.fast_noise * xi2;
    }

    pub fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.step();
        }
    }
}

/// Raw path of `n_steps + 1` states `(x, y)` starting at `(x0, y0)`, without burn-in.
pub fn simulate_two_scale(params: &TwoScaleParams, n_steps: usize) -> Result<Vec<[f64; 2]>> {
    if n_steps == 0 {
        return Err(Error::arg("n_steps must be at least 1"));
    }
    let mut s = TwoScaleStepper::new(params, 0)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push([s.x, s.y]);
    for _ in 0..n_steps {
        s.step();
        out.push([s.x, s.y]);
    }
    Ok(out)
}

/// States at `burn_in, burn_in + stride, …` as an i.i.d. dataset of `(x, y)`.
/// With `with_forces`, each sample carries the fine-scale force on the slow
/// variable, `-y`.
pub fn subsample_iid(trajectory: &[[f64; 2]], burn_in: usize, stride: usize, with_forces: bool) -> Result<IidDataset> {
    if stride == 0 {
        return Err(Error::arg("stride must be at least 1"));
    }
    if burn_in >= trajectory.len() {
        return Err(Error::arg(format!(
            "burn-in {burn_in} leaves no samples in a path of length {}",
            trajectory.len()
        )));
    }
    let picked: Vec<[f64; 2]> = trajectory[burn_in..].iter().step_by(stride).copied().collect();
    iid_from_states(&picked, with_forces)
}

fn iid_from_states(states: &[[f64; 2]], with_forces: bool) -> Result<IidDataset> {
    let flat: Vec<f64> = states.iter().flat_map(|s| s.iter().copied()).collect();
    let forces = with_forces.then(|| (1, states.iter().map(|s| -s[1]).collect()));
    IidDataset::new(2, flat, forces)
}

/// `n` approximately independent samples from the stationary law, taken every
/// `stride_time` time units along one path after the burn-in. Streams the path
/// instead of storing it.
pub fn sample_iid(params: &TwoScaleParams, n: usize, stride_time: f64, with_forces: bool) -> Result<IidDataset> {
    if n == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    let mut s = TwoScaleStepper::new(params, 0)?;
    let stride = params.steps_for(stride_time).max(1);
    s.advance(params.steps_for(params.burn_in_time));
    let mut states = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            s.advance(stride);
        }
        states.push([s.x, s.y]);
    }
    iid_from_states(&states, with_forces)
}

/// `n_paths` independent recorded paths of `n_t` states, one every
/// `record_stride` fine steps (`h = h_fine · record_stride`), each with its own
/// RNG stream and its own burn-in. States are `(x, y)`; forces are `-y`.
pub fn generate_paths(params: &TwoScaleParams, n_paths: usize, n_t: usize, record_stride: usize) -> Result<TimeSeriesDataset> {
    params.validate()?;
    if n_paths == 0 || n_t < 2 || record_stride == 0 {
        return Err(Error::arg("need n_paths ≥ 1, n_t ≥ 2 and record_stride ≥ 1"));
    }
    let burn = params.steps_for(params.burn_in_time);
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|k| -> Result<Trajectory> {
            let mut s = TwoScaleStepper::new(params, k as u64 + 1)?;
            s.advance(burn);
            let mut states = Vec::with_capacity(2 * n_t);
            let mut forces = Vec::with_capacity(n_t);
            for i in 0..n_t {
                if i > 0 {
                    s.advance(record_stride);
                }
                states.extend([s.x, s.y]);
                forces.push(-s.y);
            }
            Ok(Trajectory {
                states,
                forces: Some(forces),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeriesDataset::new(
        2,
        1,
        paths,
        params.h_fine * record_stride as f64,
        params.burn_in_time > 0.0,
    )
}

/// Fine steps per record for a target recorded step `h`.
pub fn record_stride_for(params: &TwoScaleParams, h: f64) -> usize {
    ((h / params.h_fine).round() as usize).max(1)
}

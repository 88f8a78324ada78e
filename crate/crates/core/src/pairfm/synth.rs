//! Metropolis Monte Carlo generator of configurations with exact pair forces.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::{solve_normal_equations, NormalAccumulator};
use crate::rng::{stream_rng, StreamRng};

use super::config::{min_image, ParticleConfig};
use super::fit::{pair_forces, pair_potential};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairSynthParams {
    pub m: usize,
    pub box_length: f64,
    pub n_configs: usize,
    /// Thermal energy `kT` in potential units.
    pub temperature: f64,
    pub seed: u64,
    /// Sweeps (`m` attempted moves each) between stored configurations.
    pub sweeps_between: usize,
    pub equilibration_sweeps: usize,
    /// Configurations drawn from one chain before a fresh chain is started.
    pub configs_per_chain: usize,
    /// Standard deviation of Gaussian noise added to every force component
    /// (per-configuration mean removed, so net force stays zero).
    pub force_noise: f64,
    pub target_acceptance: f64,
}

impl Default for PairSynthParams {
    fn default() -> Self {
        PairSynthParams {
            m: DESK_M,
            box_length: desk_box_length(),
            n_configs: 200,
            temperature: 1.0,
            seed: 0,
            sweeps_between: 20,
            equilibration_sweeps: 200,
            configs_per_chain: 50,
            force_noise: DESK_FORCE_NOISE,
            target_acceptance: 0.4,
        }
    }
}

pub const DESK_M: usize = 125;
/// Reduced density `ρσ³` with reference diameter `σ = 0.5`.
pub const DESK_REDUCED_DENSITY: f64 = 0.7;
pub const DESK_SIGMA: f64 = 0.5;
pub const DESK_K: usize = 30;
pub const DESK_R_MIN: f64 = 0.35;
pub const DESK_CUTOFF: f64 = 1.4;
pub const DESK_WELL_DEPTH: f64 = 0.6;
pub const DESK_WELL_POSITION: f64 = 0.55;
pub const DESK_FORCE_NOISE: f64 = 2.0;

pub fn desk_box_length() -> f64 {
    (DESK_M as f64 * DESK_SIGMA.powi(3) / DESK_REDUCED_DENSITY).cbrt()
}

fn mie_6_3(r: f64) -> (f64, f64) {
    let s3 = (DESK_WELL_POSITION / r).powi(3);
    let u = DESK_WELL_DEPTH * (s3 * s3 - 2.0 * s3);
    let du = DESK_WELL_DEPTH * (-6.0 * s3 * s3 + 6.0 * s3) / r;
    (u, du)
}

/// Soft `ε[(r_m/r)⁶ - 2(r_m/r)³]` well, shifted-force truncated at the cutoff
/// so that both `u` and `u'` vanish there.
pub fn reference_pair_potential(r: f64) -> f64 {
    if r >= DESK_CUTOFF {
        return 0.0;
    }
    let (u, _) = mie_6_3(r);
    let (uc, duc) = mie_6_3(DESK_CUTOFF);
    u - uc - (r - DESK_CUTOFF) * duc
}

/// Least-squares projection of `f` onto a spline basis on `points` uniform nodes.
pub fn project_potential(basis: &BasisSet, f: impl Fn(f64) -> f64, points: usize) -> Result<Vec<f64>> {
    let (lo, hi) = basis
        .domain()
        .ok_or_else(|| Error::Unsupported("projection needs a spline basis".into()))?;
    let k = basis.len();
    let mut acc = NormalAccumulator::new(k);
    let mut row = vec![0.0; k];
    for i in 0..points {
        let r = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        basis.eval_into(r, &mut row)?;
        acc.add_row(&row, f(r));
    }
    Ok(solve_normal_equations(&acc.finish()?)?.as_slice().to_vec())
}

/// The desk-scale problem: basis, generator coefficients and MC settings.
#[derive(Clone, Debug, PartialEq)]
pub struct DeskSetup {
    pub basis: BasisSet,
    pub theta_true: Vec<f64>,
    pub cutoff: f64,
    pub params: PairSynthParams,
}

pub fn desk_setup(n_configs: usize, seed: u64) -> Result<DeskSetup> {
    let basis = BasisSet::anchored_cubic_bspline(DESK_K, DESK_R_MIN, DESK_CUTOFF)?;
    let theta_true = project_potential(&basis, reference_pair_potential, 4001)?;
    Ok(DeskSetup {
        basis,
        theta_true,
        cutoff: DESK_CUTOFF,
        params: PairSynthParams { n_configs, seed, ..Default::default() },
    })
}

struct Chain<'a> {
    basis: &'a BasisSet,
    theta: &'a [f64],
    r_min: f64,
    cutoff: f64,
    l: f64,
    kt: f64,
    pos: Vec<[f64; 3]>,
    step: f64,
}

impl Chain<'_> {
    /// Interaction energy of particle `i` placed at `p`; `None` inside the hard core.
    fn energy_at(&self, i: usize, p: [f64; 3]) -> Result<Option<f64>> {
        let mut e = 0.0;
        for (j, q) in self.pos.iter().enumerate() {
            if j == i {
                continue;
            }
            let d = min_image(p, *q, self.l);
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if r2 < self.r_min * self.r_min {
                return Ok(None);
            }
            if r2 <= self.cutoff * self.cutoff {
                e += pair_potential(self.basis, self.theta, r2.sqrt())?;
            }
        }
        Ok(Some(e))
    }

    /// One sweep of `m` single-particle moves; returns accepted count.
    fn sweep(&mut self, rng: &mut StreamRng) -> Result<usize> {
        let m = self.pos.len();
        let mut accepted = 0;
        for _ in 0..m {
            let i = rng.random_range(0..m);
            let old = self.pos[i];
            let new = [0, 1, 2].map(|c| (old[c] + self.step * rng.random_range(-1.0..1.0)).rem_euclid(self.l));
            let Some(e_new) = self.energy_at(i, new)? else { continue };
            let e_old = self.energy_at(i, old)?.unwrap_or(f64::INFINITY);
            let de = e_new - e_old;
            if de <= 0.0 || rng.random::<f64>() < (-de / self.kt).exp() {
                self.pos[i] = new;
                accepted += 1;
            }
        }
        Ok(accepted)
    }
}

fn lattice(m: usize, l: f64) -> Vec<[f64; 3]> {
    let n = (m as f64).cbrt().ceil() as usize;
    let a = l / n as f64;
    (0..m)
        .map(|s| [s / (n * n), (s / n) % n, s % n].map(|c| (c as f64 + 0.5) * a))
        .collect()
}

fn add_force_noise(forces: &mut [[f64; 3]], sd: f64, rng: &mut StreamRng) -> Result<()> {
    if sd == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::arg(e.to_string()))?;
    let mut mean = [0.0; 3];
    for f in forces.iter_mut() {
        for c in 0..3 {
            f[c] += normal.sample(rng);
            mean[c] += f[c];
        }
    }
    let m = forces.len() as f64;
    for f in forces.iter_mut() {
        for c in 0..3 {
            f[c] -= mean[c] / m;
        }
    }
    Ok(())
}

/// Draw `params.n_configs` configurations from `exp(-Σu(r_ij;θ)/kT)` with a hard
/// core below the basis domain, each with exact forces `Σ -u'(r_ij) û_ij`.
/// Chains of `configs_per_chain` configurations run on separate RNG streams.
pub fn synth_pair_data(theta_true: &[f64], basis: &BasisSet, params: &PairSynthParams) -> Result<Vec<ParticleConfig>> {
    let (r_min, cutoff) = basis
        .domain()
        .ok_or_else(|| Error::Unsupported("pair data needs a spline basis".into()))?;
    let p = params;
    if p.m < 2 || p.n_configs == 0 || p.configs_per_chain == 0 || p.sweeps_between == 0 {
        return Err(Error::arg("need m >= 2, n_configs >= 1, configs_per_chain >= 1, sweeps_between >= 1"));
    }
    if !(p.temperature > 0.0) || !(p.force_noise >= 0.0) || !(p.target_acceptance > 0.0 && p.target_acceptance < 1.0) {
        return Err(Error::arg("temperature must be positive, force noise non-negative, target acceptance in (0,1)"));
    }
    if theta_true.len() != basis.len() {
        return Err(Error::arg("theta length does not match the basis"));
    }
    if cutoff > p.box_length / 2.0 {
        return Err(Error::Configuration(format!(
            "cutoff {cutoff} exceeds half the box length {}",
            p.box_length
        )));
    }
    let ideal = theta_true.iter().all(|&t| t == 0.0);
    let n_chains = p.n_configs.div_ceil(p.configs_per_chain);
    let chains = (0..n_chains)
        .into_par_iter()
        .map(|c| -> Result<Vec<ParticleConfig>> {
            let mut rng = stream_rng(p.seed, c as u64);
            let count = p.configs_per_chain.min(p.n_configs - c * p.configs_per_chain);
            let mut out = Vec::with_capacity(count);
            if ideal {
                for _ in 0..count {
                    let pos: Vec<[f64; 3]> = (0..p.m).map(|_| [0; 3].map(|_| rng.random_range(0.0..p.box_length))).collect();
                    let mut forces = vec![[0.0; 3]; p.m];
                    add_force_noise(&mut forces, p.force_noise, &mut rng)?;
                    out.push(ParticleConfig::new(pos, forces, p.box_length)?);
                }
                return Ok(out);
            }
            let pos = lattice(p.m, p.box_length);
            if p.box_length / (p.m as f64).cbrt().ceil() < r_min {
                return Err(Error::Configuration("density too high for the hard core".into()));
            }
            let mut chain = Chain {
                basis,
                theta: theta_true,
                r_min,
                cutoff,
                l: p.box_length,
                kt: p.temperature,
                pos,
                step: 0.1 * r_min,
            };
            let max_step = p.box_length / 2.0;
            for s in 0..p.equilibration_sweeps {
                let acc = chain.sweep(&mut rng)? as f64 / p.m as f64;
                if s < p.equilibration_sweeps * 3 / 4 {
                    let factor = (acc / p.target_acceptance).clamp(0.5, 2.0);
                    chain.step = (chain.step * factor).min(max_step);
                }
            }
            let mut accepted = 0;
            let mut attempted = 0;
            for _ in 0..count {
                for _ in 0..p.sweeps_between {
                    accepted += chain.sweep(&mut rng)?;
                    attempted += p.m;
                }
                let cfg = ParticleConfig::new(chain.pos.clone(), vec![[0.0; 3]; p.m], p.box_length)?;
                let mut forces = pair_forces(&cfg, basis, theta_true, cutoff)?;
                add_force_noise(&mut forces, p.force_noise, &mut rng)?;
                out.push(cfg.with_forces(forces)?);
            }
            let rate = accepted as f64 / attempted as f64;
            if !(0.1..=0.9).contains(&rate) {
                return Err(Error::Tuning { rate });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chains.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairfm::neighbor_pairs;

    fn small_params(n: usize, seed: u64) -> PairSynthParams {
        PairSynthParams {
            m: 64,
            box_length: (64.0 * 0.125 / 0.6f64).cbrt().max(2.85),
            n_configs: n,
            seed,
            sweeps_between: 5,
            equilibration_sweeps: 60,
            configs_per_chain: 10,
            force_noise: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn reference_potential_shape() {
        assert_eq!(reference_pair_potential(DESK_CUTOFF), 0.0);
        let h = 1e-6;
        let d = (reference_pair_potential(DESK_CUTOFF - h) - reference_pair_potential(DESK_CUTOFF - 2.0 * h)) / h;
        assert!(d.abs() < 1e-4);
        let grid: Vec<f64> = (0..1000).map(|i| 0.36 + i as f64 * 0.001).collect();
        let rmin = grid
            .iter()
            .cloned()
            .min_by(|a, b| reference_pair_potential(*a).total_cmp(&reference_pair_potential(*b)))
            .unwrap();
        assert!((rmin - DESK_WELL_POSITION).abs() < 0.01);
        // single minimum: decreasing before, increasing after
        assert!(grid.windows(2).all(|w| {
            let (a, b) = (reference_pair_potential(w[0]), reference_pair_potential(w[1]));
            if w[1] <= rmin { b < a } else if w[0] >= rmin { b > a } else { true }
        }));
        let setup = desk_setup(10, 1).unwrap();
        for &r in &grid {
            let fit = pair_potential(&setup.basis, &setup.theta_true, r).unwrap();
            let want = reference_pair_potential(r);
            assert!((fit - want).abs() < 1e-3 * (1.0 + want.abs()), "{r}: {fit} vs {want}");
        }
        assert!((desk_box_length() - 2.815).abs() < 1e-3);
    }

    #[test]
    fn ideal_gas_is_uniform_with_zero_forces() {
        let basis = BasisSet::anchored_cubic_bspline(8, 0.3, 1.4).unwrap();
        let configs = synth_pair_data(&[0.0; 8], &basis, &small_params(20, 3)).unwrap();
        assert_eq!(configs.len(), 20);
        let mut mean = [0.0; 3];
        let mut n = 0.0;
        for c in &configs {
            assert!(c.forces().iter().flatten().all(|&f| f == 0.0));
            for p in c.positions() {
                for a in 0..3 {
                    mean[a] += p[a];
                }
                n += 1.0;
            }
        }
        let l = configs[0].box_length();
        for m in mean {
            // uniform mean L/2 with sd L/√(12 n)
            assert!((m / n - l / 2.0).abs() < 4.0 * l / (12.0 * n).sqrt());
        }
    }

    #[test]
    fn net_force_vanishes_and_seed_reproduces() {
        let setup = desk_setup(6, 0).unwrap();
        let mut p = small_params(6, 11);
        p.force_noise = 1.0;
        let a = synth_pair_data(&setup.theta_true, &setup.basis, &p).unwrap();
        for c in &a {
            assert!(c.net_force().iter().all(|v| v.abs() < 1e-10));
        }
        let b = synth_pair_data(&setup.theta_true, &setup.basis, &p).unwrap();
        assert_eq!(a, b);
        p.seed = 12;
        assert_ne!(a, synth_pair_data(&setup.theta_true, &setup.basis, &p).unwrap());
    }

    #[test]
    fn pair_correlation_depleted_inside_core() {
        let setup = desk_setup(30, 0).unwrap();
        let configs = synth_pair_data(&setup.theta_true, &setup.basis, &small_params(30, 5)).unwrap();
        let mut core = 0.0;
        let mut well = 0.0;
        for c in &configs {
            for p in neighbor_pairs(c, 1.4).unwrap().pairs {
                // shell counts normalized by shell volume ∝ r²
                let w = 1.0 / (p.r * p.r);
                if p.r < 0.4 {
                    core += w;
                } else if (0.5..0.55).contains(&p.r) {
                    well += w;
                }
            }
        }
        // equal-width windows: the repulsive core is sampled well below the well
        assert!(core < 0.5 * well, "core {core} well {well}");
        assert!(configs.iter().all(|c| neighbor_pairs(c, 1.4).unwrap().pairs.iter().all(|p| p.r >= DESK_R_MIN)));
    }

    #[test]
    fn rejects_oversized_cutoff() {
        let setup = desk_setup(2, 0).unwrap();
        let mut p = small_params(2, 0);
        p.box_length = 2.0;
        assert!(matches!(synth_pair_data(&setup.theta_true, &setup.basis, &p), Err(Error::Configuration(_))));
    }
}

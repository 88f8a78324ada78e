//! Pair-potential force matching on periodic particle configurations.
//!
//! Model force on particle `I`: `F_I = Σ_J -u'(r_IJ) û_IJ` with
//! `u(r;θ) = Σ θ_k φ_k(r)` on a spline basis and `u = 0` beyond the cutoff.

mod config;
mod fit;
mod neighbors;
mod synth;

pub use config::{read_trajectory, write_trajectory, ParticleConfig};
pub use fit::{
    assemble_pair_fm, config_system, fit_pair_potential, pair_fm_systems, pair_forces, pair_potential,
    pair_potential_deriv, pool_systems, potential_band, write_potential_csv, PotentialBand,
};
pub use neighbors::{neighbor_pairs, neighbor_pairs_brute, Pair, PairList};
pub use synth::{
    desk_box_length, desk_setup, project_potential, reference_pair_potential, synth_pair_data, DeskSetup,
    PairSynthParams, DESK_CUTOFF, DESK_FORCE_NOISE, DESK_K, DESK_M, DESK_R_MIN, DESK_REDUCED_DENSITY, DESK_SIGMA,
    DESK_WELL_DEPTH, DESK_WELL_POSITION,
};

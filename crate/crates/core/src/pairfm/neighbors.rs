use crate::error::{Error, Result};

use super::config::ParticleConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    /// `(q_i - q_j) / r` under the minimum image.
    pub unit: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairList {
    pub pairs: Vec<Pair>,
    pub cutoff: f64,
}

fn check_cutoff(config: &ParticleConfig, cutoff: f64) -> Result<()> {
    if !(cutoff > 0.0) {
        return Err(Error::arg(format!("cutoff must be positive, got {cutoff}")));
    }
    if cutoff > config.box_length() / 2.0 {
        return Err(Error::Configuration(format!(
            "cutoff {cutoff} exceeds half the box length {}",
            config.box_length()
        )));
    }
    Ok(())
}

fn make_pair(config: &ParticleConfig, i: usize, j: usize, cutoff: f64) -> Option<Pair> {
    let d = config.separation(i, j);
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if r2 > cutoff * cutoff || r2 == 0.0 {
        return None;
    }
    let r = r2.sqrt();
    Some(Pair { i, j, r, unit: d.map(|v| v / r) })
}

/// All-pairs reference search.
pub fn neighbor_pairs_brute(config: &ParticleConfig, cutoff: f64) -> Result<PairList> {
    check_cutoff(config, cutoff)?;
    let m = config.len();
    let pairs = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .filter_map(|(i, j)| make_pair(config, i, j, cutoff))
        .collect();
    Ok(PairList { pairs, cutoff })
}

/// Unordered pairs within `cutoff`, sorted by `(i, j)`. Uses a cell list when
/// the box holds at least three cells per side.
pub fn neighbor_pairs(config: &ParticleConfig, cutoff: f64) -> Result<PairList> {
    check_cutoff(config, cutoff)?;
    let l = config.box_length();
    let nc = (l / cutoff).floor() as usize;
    if nc < 3 {
        return neighbor_pairs_brute(config, cutoff);
    }
    let cell_of = |p: &[f64; 3]| -> [usize; 3] { p.map(|v| ((v / l * nc as f64) as usize).min(nc - 1)) };
    let index = |c: [usize; 3]| (c[0] * nc + c[1]) * nc + c[2];
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); nc * nc * nc];
    let owner: Vec<[usize; 3]> = config.positions().iter().map(cell_of).collect();
    for (i, c) in owner.iter().enumerate() {
        cells[index(*c)].push(i);
    }
    let mut pairs = Vec::new();
    for (i, c) in owner.iter().enumerate() {
        for dx in [nc - 1, 0, 1] {
            for dy in [nc - 1, 0, 1] {
                for dz in [nc - 1, 0, 1] {
                    let n = [(c[0] + dx) % nc, (c[1] + dy) % nc, (c[2] + dz) % nc];
                    for &j in &cells[index(n)] {
                        if j > i {
                            if let Some(p) = make_pair(config, i, j, cutoff) {
                                pairs.push(p);
                            }
                        }
                    }
                }
            }
        }
    }
    pairs.sort_by_key(|p| (p.i, p.j));
    Ok(PairList { pairs, cutoff })
}

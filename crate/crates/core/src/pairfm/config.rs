use std::io::{BufRead, Write};

use crate::dataset::fmt17;
use crate::error::{Error, Result};

/// One configuration of `m` particles in a cubic periodic box.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleConfig {
    positions: Vec<[f64; 3]>,
    forces: Vec<[f64; 3]>,
    box_length: f64,
}

fn wrap(v: f64, l: f64) -> f64 {
    let w = v.rem_euclid(l);
    // rem_euclid can round up to exactly l
    if w >= l {
        0.0
    } else {
        w
    }
}

impl ParticleConfig {
    /// Positions are wrapped into `[0, L)³`.
    pub fn new(positions: Vec<[f64; 3]>, forces: Vec<[f64; 3]>, box_length: f64) -> Result<Self> {
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::arg(format!("box length must be positive, got {box_length}")));
        }
        if positions.len() < 2 {
            return Err(Error::arg("a configuration needs at least two particles"));
        }
        if forces.len() != positions.len() {
            return Err(Error::arg(format!(
                "{} positions but {} forces",
                positions.len(),
                forces.len()
            )));
        }
        if positions.iter().chain(&forces).flatten().any(|v| !v.is_finite()) {
            return Err(Error::arg("positions and forces must be finite"));
        }
        let positions = positions
            .into_iter()
            .map(|p| p.map(|v| wrap(v, box_length)))
            .collect();
        Ok(ParticleConfig { positions, forces, box_length })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn forces(&self) -> &[[f64; 3]] {
        &self.forces
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn with_forces(mut self, forces: Vec<[f64; 3]>) -> Result<Self> {
        if forces.len() != self.len() || forces.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::arg("force array does not match the configuration"));
        }
        self.forces = forces;
        Ok(self)
    }

    /// Minimum-image separation `q_i - q_j`.
    pub fn separation(&self, i: usize, j: usize) -> [f64; 3] {
        min_image(self.positions[i], self.positions[j], self.box_length)
    }

    /// Sum of all forces, zero for pairwise forces.
    pub fn net_force(&self) -> [f64; 3] {
        let mut s = [0.0; 3];
        for f in &self.forces {
            for c in 0..3 {
                s[c] += f[c];
            }
        }
        s
    }
}

pub(crate) fn min_image(a: [f64; 3], b: [f64; 3], l: f64) -> [f64; 3] {
    let mut d = [0.0; 3];
    for c in 0..3 {
        let x = a[c] - b[c];
        d[c] = x - l * (x / l).round();
    }
    d
}

/// Write configurations as blocks headed `# config=<i> box=<L>` with rows
/// `I,x,y,z,fx,fy,fz`; `meta` lines go first as `# key=value` comments.
pub fn write_trajectory<W: Write>(configs: &[ParticleConfig], mut w: W, meta: &[String]) -> Result<()> {
    for m in meta {
        writeln!(w, "# {m}")?;
    }
    writeln!(w, "I,x,y,z,fx,fy,fz")?;
    for (i, c) in configs.iter().enumerate() {
        writeln!(w, "# config={i} box={}", fmt17(c.box_length))?;
        for (k, (p, f)) in c.positions.iter().zip(&c.forces).enumerate() {
            writeln!(
                w,
                "{k},{},{},{},{},{},{}",
                fmt17(p[0]),
                fmt17(p[1]),
                fmt17(p[2]),
                fmt17(f[0]),
                fmt17(f[1]),
                fmt17(f[2])
            )?;
        }
    }
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse number {s:?}")))
}

/// Read blocks written by [`write_trajectory`]. Other `#` lines are skipped.
pub fn read_trajectory<R: BufRead>(r: R) -> Result<Vec<ParticleConfig>> {
    struct Block {
        box_length: f64,
        positions: Vec<[f64; 3]>,
        forces: Vec<[f64; 3]>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with("I,") {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let rest = rest.trim();
            if rest.starts_with("config=") {
                let box_length = rest
                    .split_whitespace()
                    .find_map(|kv| kv.strip_prefix("box="))
                    .ok_or_else(|| Error::Parse(format!("line {lineno}: block header without box=")))?;
                blocks.push(Block {
                    box_length: parse_f64(box_length, lineno)?,
                    positions: Vec::new(),
                    forces: Vec::new(),
                });
            }
            continue;
        }
        let block = blocks
            .last_mut()
            .ok_or_else(|| Error::Parse(format!("line {lineno}: particle row before any block header")))?;
        let cells: Vec<&str> = t.split(',').collect();
        if cells.len() != 7 {
            return Err(Error::Parse(format!("line {lineno}: expected 7 columns, got {}", cells.len())));
        }
        let v: Vec<f64> = cells[1..].iter().map(|c| parse_f64(c, lineno)).collect::<Result<_>>()?;
        block.positions.push([v[0], v[1], v[2]]);
        block.forces.push([v[3], v[4], v[5]]);
    }
    blocks
        .into_iter()
        .map(|b| ParticleConfig::new(b.positions, b.forces, b.box_length))
        .collect()
}

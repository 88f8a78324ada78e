//! Dataset containers and their CSV formats.
//!
//! i.i.d. files: header `x_1..x_D[,f_1..f_d]`, one row per sample.
//! Time-series files: a `# h=<real>` line, then header
//! `path_id,step,x_1..x_D[,f_1..f_d]`. Other `#` lines are metadata and ignored.
//!
//! Drift estimators read the CG coordinate as the first state component, which
//! is the projection `Π:(x,y) → x` of the two-scale benchmark. Use
//! [`IidDataset::project`] for any other [`CgMap`].

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CgMap {
    /// Keep the listed coordinates, in order.
    Selection(Vec<usize>),
    /// `q̄_i = Σ_j ζ_ij q_j` with a row-major `d × D` weight matrix.
    Linear { d: usize, weights: Vec<f64> },
}

impl CgMap {
    pub fn selection(indices: Vec<usize>) -> Result<Self> {
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.is_empty() || sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg("selection indices must be non-empty and distinct"));
        }
        Ok(CgMap::Selection(indices))
    }

    pub fn linear(d: usize, weights: Vec<f64>) -> Result<Self> {
        if d == 0 || weights.is_empty() || !weights.len().is_multiple_of(d) {
            return Err(Error::arg("weight matrix must be d × D"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::arg("linear CG weights must be non-negative"));
        }
        Ok(CgMap::Linear { d, weights })
    }

    pub fn output_dim(&self) -> usize {
        match self {
            CgMap::Selection(s) => s.len(),
            CgMap::Linear { d, .. } => *d,
        }
    }

    pub fn project(&self, state: &[f64]) -> Result<Vec<f64>> {
        match self {
            CgMap::Selection(sel) => sel
                .iter()
                .map(|&i| {
                    state.get(i).copied().ok_or_else(|| {
                        Error::arg(format!("selection index {i} out of range for D = {}", state.len()))
                    })
                })
                .collect(),
            CgMap::Linear { d, weights } => {
                let big_d = weights.len() / d;
                if state.len() != big_d {
                    return Err(Error::arg(format!(
                        "state has dimension {} but the map expects {big_d}",
                        state.len()
                    )));
                }
                Ok(weights
                    .chunks(big_d)
                    .map(|row| row.iter().zip(state).map(|(w, q)| w * q).sum())
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IidDataset {
    dim: usize,
    states: Vec<f64>,
    force_dim: usize,
    cg_forces: Option<Vec<f64>>,
    pub label: Option<String>,
}

impl IidDataset {
    /// `states` is row-major `N × dim`; `forces`, if given, is `(d, N × d)`.
    pub fn new(dim: usize, states: Vec<f64>, forces: Option<(usize, Vec<f64>)>) -> Result<Self> {
        if dim == 0 || !states.len().is_multiple_of(dim) {
            return Err(Error::arg("state array is not a whole number of D-vectors"));
        }
        let n = states.len() / dim;
        let (force_dim, cg_forces) = match forces {
            None => (0, None),
            Some((d, f)) => {
                if d == 0 || d > dim || f.len() != n * d {
                    return Err(Error::arg("force array must hold N vectors of dimension d ≤ D"));
                }
                (d, Some(f))
            }
        };
        Ok(IidDataset {
            dim,
            states,
            force_dim,
            cg_forces,
            label: None,
        })
    }

    /// One-dimensional CG samples with scalar force observations.
    pub fn scalar(xs: Vec<f64>, forces: Option<Vec<f64>>) -> Result<Self> {
        Self::new(1, xs, forces.map(|f| (1, f)))
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn force_dim(&self) -> usize {
        self.force_dim
    }

    pub fn has_forces(&self) -> bool {
        self.cg_forces.is_some()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// CG coordinate of sample `i`.
    pub fn cg(&self, i: usize) -> f64 {
        self.states[i * self.dim]
    }

    pub fn force(&self, i: usize) -> Option<&[f64]> {
        self.cg_forces
            .as_ref()
            .map(|f| &f[i * self.force_dim..(i + 1) * self.force_dim])
    }

    pub fn cg_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().step_by(self.dim).copied()
    }

    /// Rows at `indices` (repeats allowed), keeping forces.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut states = Vec::with_capacity(indices.len() * self.dim);
        let mut forces = self.cg_forces.as_ref().map(|_| Vec::with_capacity(indices.len() * self.force_dim));
        for &i in indices {
            states.extend_from_slice(self.state(i));
            if let (Some(out), Some(f)) = (forces.as_mut(), self.force(i)) {
                out.extend_from_slice(f);
            }
        }
        IidDataset {
            dim: self.dim,
            states,
            force_dim: self.force_dim,
            cg_forces: forces,
            label: self.label.clone(),
        }
    }

    /// Apply a CG map to every state; forces are kept as they are.
    pub fn project(&self, map: &CgMap) -> Result<Self> {
        let mut states = Vec::with_capacity(self.len() * map.output_dim());
        for i in 0..self.len() {
            states.extend(map.project(self.state(i))?);
        }
        let forces = self.cg_forces.clone().map(|f| (self.force_dim, f));
        if let Some((d, _)) = &forces {
            if *d > map.output_dim() {
                return Err(Error::arg("force dimension exceeds projected dimension"));
            }
        }
        let mut out = IidDataset::new(map.output_dim(), states, forces)?;
        out.label = self.label.clone();
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        header.extend((1..=self.force_dim).map(|i| format!("f_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.state(i).iter().map(|v| fmt17(*v)).collect();
            if let Some(f) = self.force(i) {
                row.extend(f.iter().map(|v| fmt17(*v)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (_, header, rows) = read_table(r)?;
        let dim = header.iter().filter(|h| h.starts_with("x_")).count();
        let force_dim = header.iter().filter(|h| h.starts_with("f_")).count();
        if dim == 0 || dim + force_dim != header.len() {
            return Err(Error::Parse(format!("unexpected i.i.d. header {header:?}")));
        }
        let mut states = Vec::with_capacity(rows.len() * dim);
        let mut forces = Vec::with_capacity(rows.len() * force_dim);
        for row in &rows {
            states.extend_from_slice(&row[..dim]);
            forces.extend_from_slice(&row[dim..]);
        }
        let forces = (force_dim > 0).then_some((force_dim, forces));
        IidDataset::new(dim, states, forces)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Row-major `N_t × D`.
    pub states: Vec<f64>,
    /// Row-major `N_t × d` force observations, when recorded.
    pub forces: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesDataset {
    dim: usize,
    force_dim: usize,
    paths: Vec<Trajectory>,
    time_step: f64,
    pub stationary: bool,
}

impl TimeSeriesDataset {
    pub fn new(dim: usize, force_dim: usize, paths: Vec<Trajectory>, time_step: f64, stationary: bool) -> Result<Self> {
        if !(time_step > 0.0) {
            return Err(Error::arg("time step must be positive"));
        }
        if dim == 0 || paths.is_empty() {
            return Err(Error::arg("need at least one path of dimension ≥ 1"));
        }
        for (k, p) in paths.iter().enumerate() {
            if p.states.len() % dim != 0 || p.states.len() / dim < 2 {
                return Err(Error::arg(format!("path {k} has fewer than 2 states")));
            }
            match (&p.forces, force_dim) {
                (None, 0) => {}
                (Some(f), d) if d > 0 && f.len() == d * p.states.len() / dim => {}
                _ => return Err(Error::arg(format!("path {k} has inconsistent force records"))),
            }
        }
        Ok(TimeSeriesDataset {
            dim,
            force_dim,
            paths,
            time_step,
            stationary,
        })
    }

    /// Scalar CG paths without force records.
    pub fn scalar(paths: Vec<Vec<f64>>, time_step: f64) -> Result<Self> {
        let paths = paths
            .into_iter()
            .map(|states| Trajectory { states, forces: None })
            .collect();
        Self::new(1, 0, paths, time_step, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn force_dim(&self) -> usize {
        self.force_dim
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[Trajectory] {
        &self.paths
    }

    pub fn path_len(&self, k: usize) -> usize {
        self.paths[k].states.len() / self.dim
    }

    pub fn total_states(&self) -> usize {
        (0..self.n_paths()).map(|k| self.path_len(k)).sum()
    }

    /// CG coordinates (first component) of path `k`.
    pub fn cg_path(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.paths[k].states.iter().step_by(self.dim).copied()
    }

    /// Scalar force observations of path `k`, if recorded.
    pub fn force_path(&self, k: usize) -> Option<impl Iterator<Item = f64> + '_> {
        let d = self.force_dim.max(1);
        self.paths[k].forces.as_ref().map(|f| f.iter().step_by(d).copied())
    }

    /// Whole paths at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        TimeSeriesDataset {
            paths: indices.iter().map(|&i| self.paths[i].clone()).collect(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        TimeSeriesDataset {
            dim: self.dim,
            force_dim: self.force_dim,
            paths: Vec::new(),
            time_step: self.time_step,
            stationary: self.stationary,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        writeln!(w, "# h={}", fmt17(self.time_step))?;
        writeln!(w, "# stationary={}", self.stationary)?;
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        let mut header = vec!["path_id".to_string(), "step".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x_{i}")));
        header.extend((1..=self.force_dim).map(|i| format!("f_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (k, p) in self.paths.iter().enumerate() {
            for (i, s) in p.states.chunks(self.dim).enumerate() {
                let mut row = vec![k.to_string(), i.to_string()];
                row.extend(s.iter().map(|v| fmt17(*v)));
                if let Some(f) = &p.forces {
                    row.extend(f[i * self.force_dim..(i + 1) * self.force_dim].iter().map(|v| fmt17(*v)));
                }
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (comments, header, rows) = read_table(r)?;
        let mut h = None;
        let mut stationary = false;
        for c in &comments {
            if let Some(v) = c.strip_prefix("h=") {
                h = Some(v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("h: {e}")))?);
            } else if let Some(v) = c.strip_prefix("stationary=") {
                stationary = v.trim() == "true";
            }
        }
        let h = h.ok_or_else(|| Error::Parse("missing '# h=<real>' line".into()))?;
        if header.len() < 3 || header[0] != "path_id" || header[1] != "step" {
            return Err(Error::Parse(format!("unexpected time-series header {header:?}")));
        }
        let dim = header.iter().filter(|c| c.starts_with("x_")).count();
        let force_dim = header.iter().filter(|c| c.starts_with("f_")).count();
        if dim == 0 || 2 + dim + force_dim != header.len() {
            return Err(Error::Parse(format!("unexpected time-series header {header:?}")));
        }
        let mut paths: Vec<Trajectory> = Vec::new();
        let mut last_id: Option<f64> = None;
        for row in rows {
            if last_id != Some(row[0]) {
                paths.push(Trajectory {
                    states: Vec::new(),
                    forces: (force_dim > 0).then(Vec::new),
                });
                last_id = Some(row[0]);
            }
            let p = paths.last_mut().expect("pushed above");
            p.states.extend_from_slice(&row[2..2 + dim]);
            if let Some(f) = p.forces.as_mut() {
                f.extend_from_slice(&row[2 + dim..]);
            }
        }
        TimeSeriesDataset::new(dim, force_dim, paths, h, stationary)
    }
}

/// Shortest representation that round-trips (at most 17 significant digits).
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:?}")
}

type Table = (Vec<String>, Vec<String>, Vec<Vec<f64>>);

fn read_table<R: BufRead>(r: R) -> Result<Table> {
    let mut comments = Vec::new();
    let mut body = String::new();
    for line in r.lines() {
        let line = line?;
        match line.strip_prefix('#') {
            Some(c) => comments.push(c.trim().to_string()),
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("'{v}': {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((comments, header, rows))
}

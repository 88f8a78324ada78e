//! Normal equations and guarded symmetric solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a symmetric matrix counts as singular.
pub const CONDITION_FLOOR: f64 = 1e-12;

/// Normal equations `Aᵀ A / N · θ = Aᵀ b / N` of a least-squares problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
    pub n_rows: usize,
}

impl LinearSystem {
    /// Average of systems with the given non-negative weights (normalized internally).
    pub fn weighted_mean(systems: &[LinearSystem], weights: &[f64]) -> Result<LinearSystem> {
        let first = systems
            .first()
            .ok_or_else(|| Error::arg("no systems to combine"))?;
        let k = first.moment.len();
        let total: f64 = weights.iter().sum();
        if systems.len() != weights.len() || !(total > 0.0) {
            return Err(Error::arg("weights must match systems and sum to a positive value"));
        }
        let mut gram = DMatrix::zeros(k, k);
        let mut moment = DVector::zeros(k);
        let mut n_rows = 0;
        for (s, &w) in systems.iter().zip(weights) {
            gram += &s.gram * (w / total);
            moment += &s.moment * (w / total);
            n_rows += s.n_rows;
        }
        Ok(LinearSystem { gram, moment, n_rows })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }
}

/// Running `Aᵀ A`, `Aᵀ b` sums.
#[derive(Clone, Debug)]
pub struct NormalAccumulator {
    ata: DMatrix<f64>,
    atb: DVector<f64>,
    n: usize,
}

impl NormalAccumulator {
    pub fn new(k: usize) -> Self {
        NormalAccumulator {
            ata: DMatrix::zeros(k, k),
            atb: DVector::zeros(k),
            n: 0,
        }
    }

    pub fn add_row(&mut self, row: &[f64], target: f64) {
        let k = row.len();
        for j in 0..k {
            let rj = row[j];
            if rj == 0.0 {
                continue;
            }
            self.atb[j] += rj * target;
            for i in j..k {
                self.ata[(i, j)] += row[i] * rj;
            }
        }
        self.n += 1;
    }

    /// Add a row given as sparse `(column, value)` entries with distinct columns.
    pub fn add_sparse_row(&mut self, row: &[(usize, f64)], target: f64) {
        for &(j, rj) in row {
            self.atb[j] += rj * target;
            for &(i, ri) in row {
                if i >= j {
                    self.ata[(i, j)] += ri * rj;
                }
            }
        }
        self.n += 1;
    }

    /// Count a row that has no nonzero entries.
    pub fn add_empty_row(&mut self) {
        self.n += 1;
    }

    pub fn merge(mut self, other: &NormalAccumulator) -> Self {
        self.ata += &other.ata;
        self.atb += &other.atb;
        self.n += other.n;
        self
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn finish(self) -> Result<LinearSystem> {
        if self.n == 0 {
            return Err(Error::arg("least-squares problem has no rows"));
        }
        let scale = 1.0 / self.n as f64;
        let mut gram = self.ata * scale;
        // only the lower triangle was accumulated
        gram.fill_upper_triangle_with_lower_triangle();
        Ok(LinearSystem {
            gram,
            moment: self.atb * scale,
            n_rows: self.n,
        })
    }
}

/// Pairwise reduction in a fixed order, so the result does not depend on how
/// the blocks were produced.
pub fn tree_reduce<T>(mut items: Vec<T>, merge: impl Fn(T, &T) -> T) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, &b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn conditioning_error(m: &DMatrix<f64>, smallest: f64, largest: f64) -> Error {
    let empty_columns = (0..m.nrows()).filter(|&i| m[(i, i)] == 0.0).collect();
    Error::Conditioning {
        smallest,
        largest,
        empty_columns,
    }
}

/// Reject symmetric matrices whose eigenvalues fall below the relative floor.
pub fn check_conditioning(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 || m.iter().any(|v| !v.is_finite()) {
        return Err(conditioning_error(m, f64::NAN, f64::NAN));
    }
    let (min, max) = eigen_extremes(m);
    if !(max > 0.0) || min <= CONDITION_FLOOR * max {
        return Err(conditioning_error(m, min, max));
    }
    Ok(())
}

/// `θ̂ = gram⁻¹ · moment` by Cholesky, after the conditioning guard.
pub fn solve_normal_equations(system: &LinearSystem) -> Result<DVector<f64>> {
    let gram = &system.gram;
    check_conditioning(gram)?;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| {
            let (min, max) = eigen_extremes(gram);
            conditioning_error(gram, min, max)
        })?;
    let mut theta = chol.solve(&system.moment);
    let tol = 1e-9 * system.moment.amax().max(f64::MIN_POSITIVE);
    for _ in 0..3 {
        let resid = &system.moment - gram * &theta;
        if resid.amax() < tol {
            break;
        }
        theta += chol.solve(&resid);
    }
    Ok(theta)
}

/// Inverse of a symmetric matrix that passes [`check_conditioning`].
pub fn guarded_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrized(m);
    check_conditioning(&sym)?;
    match sym.clone().cholesky() {
        Some(c) => Ok(c.inverse()),
        None => sym.try_inverse().ok_or_else(|| conditioning_error(m, 0.0, 0.0)),
    }
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

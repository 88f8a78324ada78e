//! Linear-in-θ function bases.
//!
//! A [`BasisSet`] describes either the polynomial drift family
//! `a(x;θ) = Σ θ_k x^(k-1)` or a pair potential `u(r;θ) = Σ θ_k φ_k(r)` built
//! from clamped B-splines on uniform knots.
//!
//! Pair potentials are only determined up to an additive constant by force
//! data, so the spline families have an *anchored* variant that drops the last
//! clamped function. Every member of that family vanishes at `r_max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Monomial,
    LinearBspline,
    CubicBspline,
}

impl BasisKind {
    fn degree(self) -> usize {
        match self {
            BasisKind::Monomial => 0,
            BasisKind::LinearBspline => 1,
            BasisKind::CubicBspline => 3,
        }
    }
}

/// Serialized form: `{kind, K, domain, knots[, anchored]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct BasisRecord {
    kind: BasisKind,
    #[serde(rename = "K")]
    k: usize,
    #[serde(default)]
    domain: Option<[f64; 2]>,
    #[serde(default)]
    knots: Vec<f64>,
    #[serde(default)]
    anchored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRecord", into = "BasisRecord")]
pub struct BasisSet {
    kind: BasisKind,
    k: usize,
    domain: Option<[f64; 2]>,
    knots: Vec<f64>,
    anchored: bool,
}

impl From<BasisSet> for BasisRecord {
    fn from(b: BasisSet) -> Self {
        BasisRecord {
            kind: b.kind,
            k: b.k,
            domain: b.domain,
            knots: b.knots,
            anchored: b.anchored,
        }
    }
}

impl TryFrom<BasisRecord> for BasisSet {
    type Error = Error;

    fn try_from(r: BasisRecord) -> Result<Self> {
        let basis = match r.kind {
            BasisKind::Monomial => BasisSet::monomial(r.k)?,
            kind => {
                let [lo, hi] = r
                    .domain
                    .ok_or_else(|| Error::arg("spline basis requires a domain"))?;
                let built = BasisSet::spline(kind, r.k, lo, hi, r.anchored)?;
                if !r.knots.is_empty() {
                    if r.knots.len() != built.knots.len()
                        || r.knots.windows(2).any(|w| w[1] < w[0])
                    {
                        return Err(Error::arg("knot vector inconsistent with kind and K"));
                    }
                    BasisSet {
                        knots: r.knots,
                        ..built
                    }
                } else {
                    built
                }
            }
        };
        Ok(basis)
    }
}

/// Nonzero run of spline values (or derivatives) at one point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Local {
    pub start: usize,
    pub len: usize,
    pub vals: [f64; 4],
}

impl Local {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.vals[..self.len]
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start + i, v))
    }
}

impl BasisSet {
    /// `{1, x, …, x^(K-1)}`.
    pub fn monomial(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("K must be at least 1"));
        }
        Ok(BasisSet {
            kind: BasisKind::Monomial,
            k,
            domain: None,
            knots: Vec::new(),
            anchored: false,
        })
    }

    pub fn linear_bspline(k: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::spline(BasisKind::LinearBspline, k, lo, hi, false)
    }

    pub fn cubic_bspline(k: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::spline(BasisKind::CubicBspline, k, lo, hi, false)
    }

    /// `K` cubic B-splines from a clamped set of `K + 1`, omitting the one that
    /// is nonzero at `hi`. Every `u(r;θ)` in the span satisfies `u(hi) = 0`.
    pub fn anchored_cubic_bspline(k: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::spline(BasisKind::CubicBspline, k, lo, hi, true)
    }

    pub fn anchored_linear_bspline(k: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::spline(BasisKind::LinearBspline, k, lo, hi, true)
    }

    fn spline(kind: BasisKind, k: usize, lo: f64, hi: f64, anchored: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::arg(format!("invalid spline domain [{lo}, {hi}]")));
        }
        let d = kind.degree();
        let n_full = k + anchored as usize;
        if k == 0 || n_full < d + 1 {
            return Err(Error::arg(format!(
                "{kind:?} needs at least {} functions, got K = {k}",
                d + 1 - anchored as usize
            )));
        }
        let n_interior = n_full - d - 1;
        let mut knots = Vec::with_capacity(n_full + d + 1);
        knots.extend(std::iter::repeat_n(lo, d + 1));
        let step = (hi - lo) / (n_interior + 1) as f64;
        knots.extend((1..=n_interior).map(|i| lo + step * i as f64));
        knots.extend(std::iter::repeat_n(hi, d + 1));
        Ok(BasisSet {
            kind,
            k,
            domain: Some([lo, hi]),
            knots,
            anchored,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Number of parameters `K`.
    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        self.domain.map(|[lo, hi]| (lo, hi))
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn is_anchored(&self) -> bool {
        self.anchored
    }

    pub fn is_spline(&self) -> bool {
        self.kind != BasisKind::Monomial
    }

    pub fn contains(&self, x: f64) -> bool {
        match self.domain {
            None => x.is_finite(),
            Some([lo, hi]) => x >= lo && x <= hi,
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if let Some([lo, hi]) = self.domain {
            if !(x >= lo && x <= hi) {
                return Err(Error::Domain { x, lo, hi });
            }
        }
        Ok(())
    }

    fn n_full(&self) -> usize {
        self.k + self.anchored as usize
    }

    /// Knot span `s` with `t[s] <= x < t[s+1]`; the right end maps to the last span.
    fn span(&self, x: f64) -> usize {
        let d = self.kind.degree();
        let n = self.n_full();
        let t = &self.knots;
        if x >= t[n] {
            return n - 1;
        }
        // first index in [d, n) whose knot exceeds x, minus one
        let upper = d + t[d..=n].partition_point(|&v| v <= x);
        (upper - 1).clamp(d, n - 1)
    }

    /// Nonzero B-spline values of degree `deg` (≤ d) on span `s`, for functions `s-deg..=s`.
    fn bspline_values(&self, s: usize, x: f64, deg: usize) -> [f64; 4] {
        let t = &self.knots;
        let mut n = [0.0; 4];
        let mut left = [0.0; 4];
        let mut right = [0.0; 4];
        n[0] = 1.0;
        for j in 1..=deg {
            left[j] = x - t[s + 1 - j];
            right[j] = t[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }

    fn trim(&self, start: usize, len: usize, vals: [f64; 4]) -> Local {
        let mut len = len;
        if self.anchored && start + len > self.k {
            len = self.k - start;
        }
        Local { start, len, vals }
    }

    pub(crate) fn local(&self, x: f64) -> Result<Local> {
        debug_assert!(self.is_spline());
        self.check_domain(x)?;
        let d = self.kind.degree();
        let s = self.span(x);
        let vals = self.bspline_values(s, x, d);
        Ok(self.trim(s - d, d + 1, vals))
    }

    pub(crate) fn local_deriv(&self, x: f64) -> Result<Local> {
        debug_assert!(self.is_spline());
        self.check_domain(x)?;
        let d = self.kind.degree();
        let s = self.span(x);
        let t = &self.knots;
        // degree d-1 functions s-d+1..=s
        let lower = self.bspline_values(s, x, d - 1);
        let lower_at = |i: usize| -> f64 {
            if i + d > s && i <= s {
                lower[i + d - 1 - s]
            } else {
                0.0
            }
        };
        let mut vals = [0.0; 4];
        let df = d as f64;
        for (slot, i) in (s - d..=s).enumerate() {
            let a = t[i + d] - t[i];
            let b = t[i + d + 1] - t[i + 1];
            let mut v = 0.0;
            if a > 0.0 {
                v += df * lower_at(i) / a;
            }
            if b > 0.0 {
                v -= df * lower_at(i + 1) / b;
            }
            vals[slot] = v;
        }
        Ok(self.trim(s - d, d + 1, vals))
    }

    /// `(φ_1(x), …, φ_K(x))`.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.k];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.k);
        if self.kind == BasisKind::Monomial {
            let mut p = 1.0;
            for o in out.iter_mut() {
                *o = p;
                p *= x;
            }
            return Ok(());
        }
        let loc = self.local(x)?;
        out.fill(0.0);
        for (i, v) in loc.iter() {
            out[i] = v;
        }
        Ok(())
    }

    /// `(φ'_1(x), …, φ'_K(x))`. Linear splines return the right derivative at knots
    /// (the left one at `r_max`).
    pub fn eval_deriv(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.k];
        self.eval_deriv_into(x, &mut out)?;
        Ok(out)
    }

    pub fn eval_deriv_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.k);
        if self.kind == BasisKind::Monomial {
            out[0] = 0.0;
            let mut p = 1.0;
            for (j, o) in out.iter_mut().enumerate().skip(1) {
                *o = j as f64 * p;
                p *= x;
            }
            return Ok(());
        }
        let loc = self.local_deriv(x)?;
        out.fill(0.0);
        for (i, v) in loc.iter() {
            out[i] = v;
        }
        Ok(())
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.k {
            return Err(Error::arg(format!(
                "theta has length {} but the basis has K = {}",
                theta.len(),
                self.k
            )));
        }
        Ok(())
    }

    /// `Σ θ_k φ_k(x)`.
    pub fn eval_model(&self, theta: &[f64], x: f64) -> Result<f64> {
        self.check_theta(theta)?;
        if self.kind == BasisKind::Monomial {
            // Horner
            return Ok(theta.iter().rev().fold(0.0, |acc, &c| acc * x + c));
        }
        Ok(self.local(x)?.iter().map(|(i, v)| theta[i] * v).sum())
    }

    /// `Σ θ_k φ'_k(x)`.
    pub fn eval_model_deriv(&self, theta: &[f64], x: f64) -> Result<f64> {
        self.check_theta(theta)?;
        if self.kind == BasisKind::Monomial {
            let mut acc = 0.0;
            for (j, &c) in theta.iter().enumerate().skip(1).rev() {
                acc = acc * x + j as f64 * c;
            }
            return Ok(acc);
        }
        Ok(self.local_deriv(x)?.iter().map(|(i, v)| theta[i] * v).sum())
    }
}

/// The potential `Ū(x;θ) = -Σ θ_k x^k / k` of a monomial drift, so that
/// `a = -dŪ/dx` and `Ū(0) = 0`.
pub fn antiderivative_potential(basis: &BasisSet, theta: &[f64], x: f64) -> Result<f64> {
    if basis.kind() != BasisKind::Monomial {
        return Err(Error::Unsupported(
            "the drift potential is only defined for the monomial basis".into(),
        ));
    }
    basis.check_theta(theta)?;
    let mut acc = 0.0;
    for (j, &c) in theta.iter().enumerate().rev() {
        acc = acc * x + c / (j + 1) as f64;
    }
    Ok(-acc * x)
}

/// `∇_θ Ū(x;θ) = (-x^k / k)_{k=1..K}`; independent of θ.
pub fn potential_gradient_into(x: f64, out: &mut [f64]) {
    let mut p = x;
    for (j, o) in out.iter_mut().enumerate() {
        *o = -p / (j + 1) as f64;
        p *= x;
    }
}

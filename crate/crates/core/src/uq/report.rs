use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::fmt17;
use crate::error::{Error, Result};

use super::normal::z_two_sided;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    Asymptotic,
    Jackknife,
    BootstrapStandard,
    BootstrapPercentile,
}

impl CiMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CiMethod::Asymptotic => "asymptotic",
            CiMethod::Jackknife => "jackknife",
            CiMethod::BootstrapStandard => "bootstrap-standard",
            CiMethod::BootstrapPercentile => "bootstrap-percentile",
        }
    }
}

/// Per-parameter confidence intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub method: CiMethod,
    pub alpha: f64,
    pub estimate: Vec<f64>,
    /// Absent for percentile intervals.
    pub variance: Option<Vec<f64>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

impl ConfidenceReport {
    /// `θ̂ ± z_{α/2} √V` per coordinate.
    pub fn symmetric(method: CiMethod, alpha: f64, estimate: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if estimate.len() != variance.len() {
            return Err(Error::arg("estimate and variance lengths differ"));
        }
        if let Some(v) = variance.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::arg(format!("variance must be non-negative, got {v}")));
        }
        let z = z_two_sided(alpha);
        let half: Vec<f64> = variance.iter().map(|v| z * v.sqrt()).collect();
        Ok(ConfidenceReport {
            method,
            alpha,
            lower: estimate.iter().zip(&half).map(|(t, h)| t - h).collect(),
            upper: estimate.iter().zip(&half).map(|(t, h)| t + h).collect(),
            estimate,
            variance: Some(variance),
        })
    }

    pub fn len(&self) -> usize {
        self.estimate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimate.is_empty()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn contains(&self, k: usize, value: f64) -> bool {
        self.lower[k] <= value && value <= self.upper[k]
    }

    /// CSV with columns `param,estimate,variance,lower,upper,method,alpha`;
    /// `param` is 1-based and the variance cell is empty when absent.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        writeln!(w, "param,estimate,variance,lower,upper,method,alpha")?;
        for k in 0..self.len() {
            let var = self.variance.as_ref().map(|v| fmt17(v[k])).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                k + 1,
                fmt17(self.estimate[k]),
                var,
                fmt17(self.lower[k]),
                fmt17(self.upper[k]),
                self.method.as_str(),
                fmt17(self.alpha)
            )?;
        }
        Ok(())
    }
}

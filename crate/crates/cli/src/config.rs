//! `--config` files: one TOML table per subcommand, checked strictly.

use std::path::Path;

use anyhow::Result;
use serde::Deserialize;

use crate::args::{
    CiArgs, CompareArgs, CoverageArgs, DensityArgs, FitArgs, PotentialArgs, SimPairsArgs, SimTwoScaleArgs,
};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub simulate: SimulateSection,
    pub fit: Option<FitArgs>,
    pub ci: Option<CiArgs>,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub export: ExportSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub twoscale: Option<SimTwoScaleArgs>,
    pub pairs: Option<SimPairsArgs>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub coverage: Option<CoverageArgs>,
    pub compare: Option<CompareArgs>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSection {
    pub density: Option<DensityArgs>,
    pub potential: Option<PotentialArgs>,
}

/// Typed error so the caller can map bad config files to the usage exit code.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

/// Flag values win; missing flags fall back to the file.
pub trait Merge {
    fn merge(self, file: Option<Self>) -> Self
    where
        Self: Sized;
}

macro_rules! impl_merge {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl Merge for $t {
            fn merge(self, file: Option<Self>) -> Self {
                let file = file.unwrap_or_default();
                Self { $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

impl_merge!(SimTwoScaleArgs { n, paths, steps, eps, h, stride_time, burn_in, out });
impl_merge!(SimPairsArgs { configs, particles, box_length, temperature, force_noise, out });
impl_merge!(FitArgs { method, data, k, r_min, cutoff, max_iter, grad_tol, out });
impl_merge!(CiArgs { method, estimator, data, alpha, b, batch, k, r_min, cutoff, grid, out, band });
impl_merge!(CoverageArgs { method, ci, n, alpha, trials, k, eps, b, batch, out });
impl_merge!(CompareArgs { methods, n, steps, k, alpha, eps, ci, b, out });
impl_merge!(DensityArgs { theta, fit, half_width, points, out });
impl_merge!(PotentialArgs { fit, reference, data, b, alpha, grid, out });

pub mod ci;
pub mod export;
pub mod fit;
pub mod simulate;
pub mod validate;

use std::path::{Path, PathBuf};

use anyhow::Result;
use cgfit::pairfm::{read_trajectory, ParticleConfig, DESK_CUTOFF, DESK_K, DESK_R_MIN};
use cgfit::validate::DriftEstimator;
use cgfit::{BasisSet, IidDataset, TimeSeriesDataset};
use serde::{Deserialize, Serialize};

use crate::args::FitMethod;
use crate::config::usage;
use crate::meta::{open, Meta};

pub fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("missing required option --{flag}")))
}

pub fn read_iid(path: &Path) -> Result<IidDataset> {
    Ok(IidDataset::read_csv(open(path)?)?)
}

pub fn read_paths(path: &Path) -> Result<TimeSeriesDataset> {
    Ok(TimeSeriesDataset::read_csv(open(path)?)?)
}

pub fn read_configs(path: &Path) -> Result<Vec<ParticleConfig>> {
    Ok(read_trajectory(open(path)?)?)
}

pub fn drift_estimator(m: FitMethod) -> Result<DriftEstimator> {
    Ok(match m {
        FitMethod::Fm => DriftEstimator::Fm,
        FitMethod::FmTs => DriftEstimator::FmTs,
        FitMethod::Re => DriftEstimator::Re,
        FitMethod::Rer => DriftEstimator::Rer,
        FitMethod::Pairfm => return Err(usage("pairfm is not a drift estimator")),
    })
}

/// Resolved basis settings, recorded in the metadata.
#[derive(Clone, Debug, Serialize)]
pub struct BasisChoice {
    pub k: usize,
    pub r_min: Option<f64>,
    pub cutoff: Option<f64>,
}

impl BasisChoice {
    pub fn resolve(method: FitMethod, k: Option<usize>, r_min: Option<f64>, cutoff: Option<f64>) -> Self {
        if method == FitMethod::Pairfm {
            BasisChoice {
                k: k.unwrap_or(DESK_K),
                r_min: Some(r_min.unwrap_or(DESK_R_MIN)),
                cutoff: Some(cutoff.unwrap_or(DESK_CUTOFF)),
            }
        } else {
            BasisChoice { k: k.unwrap_or(5), r_min: None, cutoff: None }
        }
    }

    pub fn build(&self) -> Result<BasisSet> {
        Ok(match (self.r_min, self.cutoff) {
            (Some(lo), Some(hi)) => BasisSet::anchored_cubic_bspline(self.k, lo, hi)?,
            _ => BasisSet::monomial(self.k)?,
        })
    }
}

/// `fit` output; also the input of `export`.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitFile {
    pub meta: serde_json::Value,
    pub basis: BasisSet,
    pub cutoff: Option<f64>,
    pub estimate: cgfit::ParamEstimate,
}

impl FitFile {
    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_reader(open(path)?)
            .map_err(|e| usage(format!("{} is not a fit file: {e}", path.display())))
    }
}

pub fn meta_json(meta: &Meta) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(meta)?)
}

/// Grid from `lo,hi,points`.
pub fn grid(spec: Option<&[f64]>, default: (f64, f64, usize)) -> Result<Vec<f64>> {
    let (lo, hi, n) = match spec {
        Some([lo, hi, n]) => {
            if !(n.fract() == 0.0 && *n >= 2.0 && lo < hi) {
                return Err(usage("--grid expects lo,hi,points with lo < hi and points >= 2"));
            }
            (*lo, *hi, *n as usize)
        }
        Some(_) => return Err(usage("--grid expects three values lo,hi,points")),
        None => default,
    };
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Machine output goes to the file when given, else to stdout.
pub fn emit(out: Option<&PathBuf>, f: impl FnOnce(&mut dyn std::io::Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => crate::meta::write_file(p, |w| f(w)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

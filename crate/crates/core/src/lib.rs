//! Coarse-grained model fitting with uncertainty quantification.
//!
//! Drift and pair-potential estimators (force matching, relative entropy,
//! relative entropy rate) for a two-scale diffusion and for particle systems,
//! with sandwich, resampling and band confidence intervals.

// NaN must fail validation, so bounds are checked as `!(x > lo)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod dataset;
pub mod error;
pub mod estimate;
pub mod estimators;
pub mod linalg;
pub mod pairfm;
pub mod rng;
pub mod twoscale;
pub mod uq;
pub mod validate;

pub use basis::{BasisKind, BasisSet};
pub use dataset::{CgMap, IidDataset, TimeSeriesDataset, Trajectory};
pub use error::{Error, Result};
pub use estimate::{Method, ParamEstimate};
pub use uq::{CiMethod, ConfidenceReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/two-scale.md")]
    mod two_scale {}
    #[doc = include_str!("../../../book/src/relative-entropy.md")]
    mod relative_entropy {}
    #[doc = include_str!("../../../book/src/intervals.md")]
    mod intervals {}
    #[doc = include_str!("../../../book/src/pair-potentials.md")]
    mod pair_potentials {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

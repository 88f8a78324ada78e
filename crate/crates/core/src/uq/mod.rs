//! Confidence constructions: sandwich intervals from Fisher information pairs,
//! batch means, jackknife, bootstrap, the delta method and QoI bands.

mod fisher;
mod normal;
mod qoi;
mod report;
mod resample;

pub use fisher::{
    batch_means_covariance, batch_means_sigma, default_batch_size, f1_f2_divergence, fisher_f1_iid,
    fisher_f2_iid, fisher_i1_ts, fm_fisher_pair, path_fisher_pair, re_fisher_pair, sandwich_ci_iid,
    sandwich_ci_ts, transition_scores, FisherKind, FisherPair,
};
pub use normal::{normal_quantile, z_two_sided};
pub use qoi::{delta_covariance, delta_method_se, qoi_bootstrap_ci, rstd, DeltaCovariance, QoiBand};
pub use report::{CiMethod, ConfidenceReport};
pub use resample::{
    bootstrap, bootstrap_percentile_ci, bootstrap_standard_ci, jackknife, percentile_bounds, quantile_sorted,
    BootstrapReplicates, Jackknife, Resample, FAILURE_BUDGET,
};

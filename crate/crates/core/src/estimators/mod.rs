//! Parameter fitters: force matching, relative entropy rate / path-space
//! relative entropy, and relative entropy minimization.

mod fm;
mod re;
mod rer;

pub use fm::{fit_fm_iid, fit_fm_ts, fm_system_iid, fm_system_ts};
pub use re::{
    fit_re_iid, fit_re_iid_traced, re_gradient, re_model_stats, re_objective, NewtonOptions, ReIterate,
    ReModelStats,
};
pub use rer::{fit_rer, rer_system, SHORT_SERIES_TIME};

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{tree_reduce, NormalAccumulator};

const ROW_BLOCK: usize = 4096;

/// Accumulate `n` dense rows of width `k` in fixed-size blocks, reduced in a
/// fixed pairwise order so the sums are identical for any worker count.
/// `row` fills the regressors of row `i` and returns its target.
pub(crate) fn accumulate_rows<F>(n: usize, k: usize, row: F) -> Result<NormalAccumulator>
where
    F: Fn(usize, &mut [f64]) -> Result<f64> + Sync,
{
    let blocks = n.div_ceil(ROW_BLOCK);
    let parts = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<NormalAccumulator> {
            let mut acc = NormalAccumulator::new(k);
            let mut buf = vec![0.0; k];
            for i in b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(n) {
                let target = row(i, &mut buf)?;
                acc.add_row(&buf, target);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tree_reduce(parts, |a, b| a.merge(b)).unwrap_or_else(|| NormalAccumulator::new(k)))
}

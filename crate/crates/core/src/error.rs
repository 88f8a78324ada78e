use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A spline was evaluated outside `[r_min, r_max]`.
    #[error("x = {x} lies outside the basis domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The normal equations (or a Fisher matrix) cannot be inverted reliably.
    #[error(
        "ill-conditioned system: smallest eigenvalue {smallest:.3e}, largest {largest:.3e}{}",
        fmt_empty(.empty_columns)
    )]
    Conditioning {
        smallest: f64,
        largest: f64,
        empty_columns: Vec<usize>,
    },

    /// The CG invariant density does not decay inside the quadrature window.
    #[error("density exp(-2U) is not integrable on the window: edge/max ratio {edge_ratio:.3e}")]
    Integrability { edge_ratio: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resampled refit failed at unit {index}: {source}")]
    Refit {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} resampled refits failed (budget {budget})")]
    ResampleBudget {
        failed: usize,
        total: usize,
        budget: usize,
    },

    #[error("{failed} of {total} coverage trials failed (budget {budget})")]
    TrialBudget {
        failed: usize,
        total: usize,
        budget: usize,
    },

    #[error("Monte Carlo step tuning failed: acceptance rate {rate:.3}")]
    Tuning { rate: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_empty(cols: &[usize]) -> String {
    if cols.is_empty() {
        String::new()
    } else {
        format!("; columns with no data: {cols:?}")
    }
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

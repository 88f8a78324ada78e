use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FmIid,
    ReIid,
    Rer,
    Psre,
    FmTs,
    PairFm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::FmIid => "fm-iid",
            Method::ReIid => "re-iid",
            Method::Rer => "rer",
            Method::Psre => "psre",
            Method::FmTs => "fm-ts",
            Method::PairFm => "pair-fm",
        }
    }
}

/// A fitted coefficient vector with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub theta: Vec<f64>,
    pub method: Method,
    pub n_samples: usize,
    pub seed: Option<u64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Newton iterations taken (RE only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

impl ParamEstimate {
    pub(crate) fn closed_form(theta: Vec<f64>, method: Method, n_samples: usize) -> Self {
        ParamEstimate {
            theta,
            method,
            n_samples,
            seed: None,
            converged: true,
            warnings: Vec::new(),
            iterations: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

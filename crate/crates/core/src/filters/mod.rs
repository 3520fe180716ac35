//! Online filters: RFF-KLMS, QKLMS and RFF-RLS.
//!
//! All filters start from a zero solution and expose the same one-sample
//! cycle: predict with the current state, form the prior error, update.

mod qklms;
mod rffklms;
mod rffrls;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use qklms::{Qklms, QklmsStep};
pub use rffklms::RffKlms;
pub use rffrls::RffRls;

use crate::error::{Error, Result};
use crate::kernel::{GaussianKernel, RandomFeatureMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub prediction: f64,
    /// Prior error `y - prediction`.
    pub error: f64,
}

pub trait AdaptiveFilter {
    fn input_dim(&self) -> usize;

    /// Current prediction; does not touch the state.
    fn predict(&self, x: &[f64]) -> Result<f64>;

    fn step(&mut self, x: &[f64], y: f64) -> Result<Step>;

    /// Number of stored centers for dictionary-based filters.
    fn dictionary_size(&self) -> Option<usize> {
        None
    }
}

/// Any of the three filters, with JSON checkpointing.
#[derive(Clone, Debug)]
pub enum Filter {
    RffKlms(RffKlms),
    Qklms(Qklms),
    RffRls(RffRls),
}

impl AdaptiveFilter for Filter {
    fn input_dim(&self) -> usize {
        match self {
            Filter::RffKlms(f) => f.input_dim(),
            Filter::Qklms(f) => f.input_dim(),
            Filter::RffRls(f) => f.input_dim(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Filter::RffKlms(f) => f.predict(x),
            Filter::Qklms(f) => f.predict(x),
            Filter::RffRls(f) => f.predict(x),
        }
    }

    fn step(&mut self, x: &[f64], y: f64) -> Result<Step> {
        match self {
            Filter::RffKlms(f) => f.step(x, y),
            Filter::Qklms(f) => f.step(x, y),
            Filter::RffRls(f) => f.step(x, y),
        }
    }

    fn dictionary_size(&self) -> Option<usize> {
        match self {
            Filter::Qklms(f) => Some(f.dict_size()),
            _ => None,
        }
    }
}

pub const SNAPSHOT_VERSION: u32 = 1;

/// Versioned checkpoint document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSnapshot {
    pub version: u32,
    pub state: SnapshotState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum SnapshotState {
    Rffklms {
        mu: f64,
        theta: Vec<f64>,
        map: RandomFeatureMap,
    },
    Qklms {
        mu: f64,
        epsilon: f64,
        sigma: f64,
        input_dim: usize,
        centers: Vec<Vec<f64>>,
        coeffs: Vec<f64>,
    },
    Rffrls {
        reg_lambda: f64,
        beta: f64,
        theta: Vec<f64>,
        p_matrix: Vec<Vec<f64>>,
        map: RandomFeatureMap,
    },
}

impl Filter {
    pub fn snapshot(&self) -> FilterSnapshot {
        let state = match self {
            Filter::RffKlms(f) => SnapshotState::Rffklms {
                mu: f.mu(),
                theta: f.theta().to_vec(),
                map: (**f.map()).clone(),
            },
            Filter::Qklms(f) => SnapshotState::Qklms {
                mu: f.mu(),
                epsilon: f.epsilon(),
                sigma: f.kernel().sigma(),
                input_dim: f.input_dim(),
                centers: f.centers().map(<[f64]>::to_vec).collect(),
                coeffs: f.coeffs().to_vec(),
            },
            Filter::RffRls(f) => SnapshotState::Rffrls {
                reg_lambda: f.reg_lambda(),
                beta: f.beta(),
                theta: f.theta().to_vec(),
                p_matrix: f.p_rows().map(<[f64]>::to_vec).collect(),
                map: (**f.map()).clone(),
            },
        };
        FilterSnapshot {
            version: SNAPSHOT_VERSION,
            state,
        }
    }

    pub fn restore(snapshot: FilterSnapshot) -> Result<Self> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
                snapshot.version
            )));
        }
        Ok(match snapshot.state {
            SnapshotState::Rffklms { mu, theta, map } => {
                Filter::RffKlms(RffKlms::from_parts(Arc::new(map), mu, theta)?)
            }
            SnapshotState::Qklms {
                mu,
                epsilon,
                sigma,
                input_dim,
                centers,
                coeffs,
            } => Filter::Qklms(Qklms::from_parts(
                input_dim,
                GaussianKernel::new(sigma)?,
                mu,
                epsilon,
                centers,
                coeffs,
            )?),
            SnapshotState::Rffrls {
                reg_lambda,
                beta,
                theta,
                p_matrix,
                map,
            } => Filter::RffRls(RffRls::from_parts(
                Arc::new(map),
                reg_lambda,
                beta,
                theta,
                p_matrix,
            )?),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&self.snapshot())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::restore(serde_json::from_str(&text)?)
    }
}

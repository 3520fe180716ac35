use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::ModelConfig;
use crate::error::{Error, Result};

/// One filter of an experiment. All filters of a run see the same data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterConfig {
    Rffklms {
        #[serde(default)]
        label: Option<String>,
        mu: f64,
        sigma: f64,
        feature_dim: usize,
    },
    Qklms {
        #[serde(default)]
        label: Option<String>,
        mu: f64,
        sigma: f64,
        epsilon: f64,
    },
    Rffrls {
        #[serde(default)]
        label: Option<String>,
        sigma: f64,
        feature_dim: usize,
        reg_lambda: f64,
        beta: f64,
    },
}

impl FilterConfig {
    pub fn algorithm(&self) -> &'static str {
        match self {
            FilterConfig::Rffklms { .. } => "rffklms",
            FilterConfig::Qklms { .. } => "qklms",
            FilterConfig::Rffrls { .. } => "rffrls",
        }
    }

    /// Explicit label, or one built from the hyperparameters.
    pub fn label(&self) -> String {
        match self {
            FilterConfig::Rffklms { label: Some(l), .. }
            | FilterConfig::Qklms { label: Some(l), .. }
            | FilterConfig::Rffrls { label: Some(l), .. } => l.clone(),
            FilterConfig::Rffklms { feature_dim, .. } => format!("rffklms_d{feature_dim}"),
            FilterConfig::Qklms { epsilon, .. } => format!("qklms_eps{epsilon}"),
            FilterConfig::Rffrls { feature_dim, .. } => format!("rffrls_d{feature_dim}"),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            FilterConfig::Rffklms { sigma, .. }
            | FilterConfig::Qklms { sigma, .. }
            | FilterConfig::Rffrls { sigma, .. } => *sigma,
        }
    }

    pub fn feature_dim(&self) -> Option<usize> {
        match self {
            FilterConfig::Rffklms { feature_dim, .. } | FilterConfig::Rffrls { feature_dim, .. } => {
                Some(*feature_dim)
            }
            FilterConfig::Qklms { .. } => None,
        }
    }
}

fn default_true() -> bool {
    true
}

/// A Monte Carlo experiment, usually read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub n_samples: usize,
    pub n_runs: u64,
    pub base_seed: u64,
    /// Index of the first realization; runs use indices
    /// `first_run..first_run + n_runs`.
    #[serde(default)]
    pub first_run: u64,
    /// One feature map per filter for all runs instead of a fresh map per run.
    #[serde(default)]
    pub share_feature_map: bool,
    /// Steady-state window length; defaults to the final 10% of samples.
    #[serde(default)]
    pub mse_window: Option<usize>,
    /// Attach the analytical steady-state prediction to RFF-KLMS filters on
    /// kernel-expansion data.
    #[serde(default = "default_true")]
    pub theory: bool,
    pub model: ModelConfig,
    #[serde(default)]
    pub filters: Vec<FilterConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be >= 1".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be >= 1".into()));
        }
        if let Some(w) = self.mse_window {
            if w == 0 || w > self.n_samples {
                return Err(Error::Config(format!(
                    "mse_window must be in 1..={}, got {w}",
                    self.n_samples
                )));
            }
        }
        if self.model.input_dim() == 0 {
            return Err(Error::Config("model input_dim must be >= 1".into()));
        }
        for f in &self.filters {
            if !(f.sigma() > 0.0) {
                return Err(Error::Config(format!("{}: sigma must be > 0", f.label())));
            }
            if f.feature_dim() == Some(0) {
                return Err(Error::Config(format!("{}: feature_dim must be >= 1", f.label())));
            }
        }
        Ok(())
    }

    /// Steady-state window length.
    pub fn window(&self) -> usize {
        self.mse_window.unwrap_or_else(|| (self.n_samples / 10).max(1))
    }
}

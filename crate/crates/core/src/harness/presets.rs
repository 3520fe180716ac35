//! Experiment configs shipped with the crate.

use crate::error::{Error, Result};

use super::ExperimentConfig;

const PRESETS: &[(&str, &str)] = &[
    ("example1_d100", include_str!("../../presets/example1_d100.toml")),
    ("example1_d500", include_str!("../../presets/example1_d500.toml")),
    ("example1_d1000", include_str!("../../presets/example1_d1000.toml")),
    ("example1_d5000", include_str!("../../presets/example1_d5000.toml")),
    ("example2", include_str!("../../presets/example2.toml")),
    ("example2_rls", include_str!("../../presets/example2_rls.toml")),
    ("example3", include_str!("../../presets/example3.toml")),
    ("example4", include_str!("../../presets/example4.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// TOML source of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<ExperimentConfig> {
    let text = source(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown preset '{name}' (available: {})",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    ExperimentConfig::from_toml(text)
}

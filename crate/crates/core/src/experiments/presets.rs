use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// `(name, TOML text)` of every bundled preset.
        pub const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../presets/", $name, ".toml")))),*
        ];
    };
}

presets!(
    "gap_sweep_linear",
    "gap_sweep_polynomial",
    "gap_sweep_ntk",
    "equivalence",
    "equivalence_full",
    "gd_dynamics",
    "gd_dynamics_full",
    "gp_optimality",
    "gp_optimality_full",
    "counterexample",
    "counterexample_full",
);

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`; known: {}", preset_names().collect::<Vec<_>>().join(", "))))?;
    ExperimentConfig::from_toml_str(text)
}

/// Desk-scale preset used when no config is given.
pub fn default_preset(kind: ExperimentKind) -> ExperimentConfig {
    let name = match kind {
        ExperimentKind::GapSweep => "gap_sweep_ntk",
        other => other.as_str(),
    };
    preset(name).expect("bundled presets parse")
}

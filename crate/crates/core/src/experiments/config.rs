use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data_gen::{CovarianceFamily, TeacherSpec, ZDistribution};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Test points may exceed the largest training size by at most this factor.
pub const MAX_TEST_TO_TRAIN: f64 = 10.0;

/// Default training-size grid relative to `p`.
pub const DEFAULT_N_RATIOS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Default gradient-descent steps.
pub const DEFAULT_STEPS: [u64; 8] = [0, 1, 2, 5, 10, 20, 50, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GapSweep,
    Equivalence,
    GdDynamics,
    GpOptimality,
    Counterexample,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::GapSweep => "gap_sweep",
            ExperimentKind::Equivalence => "equivalence",
            ExperimentKind::GdDynamics => "gd_dynamics",
            ExperimentKind::GpOptimality => "gp_optimality",
            ExperimentKind::Counterexample => "counterexample",
        }
    }
}

fn default_trials() -> usize {
    5
}
fn default_n_ts() -> usize {
    200
}
fn default_beta() -> f64 {
    1.0
}

/// Fully resolved experiment configuration. Every field is echoed into the
/// output sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// What the config runs and where its parameter values come from.
    #[serde(default)]
    pub description: String,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub covariance: CovarianceFamily,
    #[serde(default)]
    pub z_dist: ZDistribution,
    #[serde(default)]
    pub teacher: Option<TeacherSpec>,
    /// Feature dimensions to run; a single entry for most presets.
    pub p_list: Vec<usize>,
    /// Explicit training sizes. When empty, `n_ratios` times `p` is used.
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub n_ratios: Vec<f64>,
    /// `n = round(beta·p)` for gap sweeps.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_n_ts")]
    pub n_ts: usize,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub steps: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Training sizes for dimension `p`.
    pub fn n_values(&self, p: usize) -> Vec<usize> {
        if !self.n_list.is_empty() {
            return self.n_list.clone();
        }
        let ratios: &[f64] = if self.n_ratios.is_empty() {
            &DEFAULT_N_RATIOS
        } else {
            &self.n_ratios
        };
        ratios.iter().map(|r| ((r * p as f64).round() as usize).max(1)).collect()
    }

    pub fn step_values(&self) -> Vec<u64> {
        if self.steps.is_empty() {
            DEFAULT_STEPS.to_vec()
        } else {
            self.steps.clone()
        }
    }

    pub fn teacher_or_default(&self) -> TeacherSpec {
        self.teacher.clone().unwrap_or(match self.experiment {
            ExperimentKind::GpOptimality | ExperimentKind::Counterexample => TeacherSpec::Gp {
                kernel: self.kernel.clone(),
            },
            _ => TeacherSpec::ReluNet { widths: vec![100, 100] },
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.p_list.is_empty() || self.p_list.contains(&0) {
            return bad("p_list must be non-empty with positive entries".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_ratios.iter().any(|r| !(*r > 0.0)) || self.n_list.contains(&0) {
            return bad("training sizes must be positive".into());
        }
        if self.experiment == ExperimentKind::GapSweep {
            if !(self.beta > 0.0) {
                return bad("beta must be positive".into());
            }
            return Ok(());
        }
        if self.n_ts == 0 {
            return bad("n_ts must be at least 1".into());
        }
        for &p in &self.p_list {
            let max_n = self.n_values(p).into_iter().max().unwrap_or(1);
            if self.n_ts as f64 > MAX_TEST_TO_TRAIN * max_n as f64 {
                return bad(format!(
                    "n_ts = {} exceeds {MAX_TEST_TO_TRAIN} x the largest training size {max_n} at p = {p}",
                    self.n_ts
                ));
            }
        }
        if !(self.sigma2 >= 0.0) {
            return bad("sigma2 must be >= 0".into());
        }
        match self.experiment {
            ExperimentKind::GpOptimality | ExperimentKind::Counterexample => {
                if !(self.sigma2 > 0.0) {
                    return bad("sigma2 must be > 0; it is also the ridge parameter".into());
                }
                if !matches!(self.teacher_or_default(), TeacherSpec::Gp { .. }) {
                    return bad("this experiment needs a Gaussian-process teacher".into());
                }
            }
            _ => {
                if !(self.lambda > 0.0) {
                    return bad("lambda must be > 0 (ridgeless fits are not supported)".into());
                }
            }
        }
        if self.experiment == ExperimentKind::Counterexample
            && !matches!(self.covariance, CovarianceFamily::LowRankMixture { .. })
        {
            return bad("counterexample needs covariance kind = \"low_rank_mixture\"".into());
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return bad("eta must be > 0".into());
            }
        }
        if let Some(TeacherSpec::OracleLinear { w, .. }) = &self.teacher {
            if self.p_list.iter().any(|&p| p != w.len()) {
                return bad("oracle_linear teacher weights must have length p".into());
            }
        }
        Ok(())
    }
}

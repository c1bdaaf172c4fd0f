//! Experiment configuration: one TOML file holding the model, the initial
//! law, the run sizes and the solver resolution.
//!
//! ```toml
//! dimension = 2
//! kappa = 0.5
//! lambda = 1.0
//! epsilons = [0.08, 0.04, 0.02]   # strictly decreasing
//! t_final = 1.0
//! snapshots = [0.25, 0.5, 0.75]   # optional; t_final is always added
//! replicas = 100000
//! master_seed = 42
//! stop_threshold = 1e-6           # optional, absolute speed
//! output_dir = "out"
//!
//! [profile]
//! kind = "constant"               # or "affine" (s0, slope) / "tabulated" (speeds, values)
//! s0 = 1.0
//! # v_max = 2.0
//!
//! [initial]
//! kind = "point"                  # or "uniform" (min, max)
//! speed = 1.0
//! bound = 1.0                     # R: every initial speed must be <= R
//!
//! [kinetic]                       # optional
//! cells = 2000
//! dt = 1e-3
//! n_max = 8
//! ```

use crate::ensemble::InitialLaw;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::profile::{ProfileKind, SlowingProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    #[serde(flatten)]
    pub kind: ProfileKind,
    #[serde(default)]
    pub v_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    #[serde(flatten)]
    pub law: InitialLaw,
    /// Upper bound `R` on initial speeds; defaults to the largest one.
    #[serde(default)]
    pub bound: Option<f64>,
}

impl InitialSpec {
    pub fn bound(&self) -> f64 {
        self.bound.unwrap_or(self.law.max_speed())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSpec {
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Forward solver step; `None` picks `0.01/(σR)`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_cells() -> usize {
    2000
}

fn default_n_max() -> usize {
    8
}

impl Default for KineticSpec {
    fn default() -> Self {
        Self {
            cells: default_cells(),
            dt: None,
            n_max: default_n_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub kappa: f64,
    pub lambda: f64,
    pub epsilons: Vec<f64>,
    pub t_final: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    pub replicas: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub stop_threshold: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub profile: ProfileSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub kinetic: KineticSpec,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A validated configuration together with the hash of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Hex SHA-256 of the file bytes.
    pub sha256: String,
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let field = field_from_message(&message).unwrap_or_else(|| "<document>".to_string());
            Error::config(field, message)
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let bytes = std::fs::read(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::config("--config", "file is not UTF-8"))?;
        let config = Self::from_toml_str(text)?;
        Ok(LoadedConfig {
            config,
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }

    /// Field-level checks; the error names the first offending field.
    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.dimension, 1.0, self.kappa, self.lambda)?;
        if !(self.kappa > 0.0) {
            return Err(Error::config("kappa", format!("must be > 0, got {}", self.kappa)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::config("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        if self.epsilons.is_empty() {
            return Err(Error::config("epsilons", "must list at least one radius"));
        }
        for (i, &e) in self.epsilons.iter().enumerate() {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::config(format!("epsilons[{i}]"), format!("must be > 0, got {e}")));
            }
            if i > 0 && !(e < self.epsilons[i - 1]) {
                return Err(Error::config(
                    format!("epsilons[{i}]"),
                    "list must be strictly decreasing",
                ));
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config("t_final", format!("must be >= 0, got {}", self.t_final)));
        }
        for (i, &t) in self.snapshots.iter().enumerate() {
            if !(t >= 0.0 && t <= self.t_final) {
                return Err(Error::config(
                    format!("snapshots[{i}]"),
                    format!("must lie in [0, t_final], got {t}"),
                ));
            }
        }
        if self.replicas == 0 {
            return Err(Error::config("replicas", "must be >= 1"));
        }
        if let Some(s) = self.stop_threshold {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("stop_threshold", format!("must be > 0, got {s}")));
            }
        }
        self.initial.law.validate()?;
        let bound = self.initial.bound();
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::config("initial.bound", format!("must be > 0, got {bound}")));
        }
        if self.initial.law.max_speed() > bound {
            return Err(Error::config(
                "initial.bound",
                format!("initial speeds up to {} exceed R = {bound}", self.initial.law.max_speed()),
            ));
        }
        let profile = self.slowing_profile()?;
        if profile.v_max() < bound {
            return Err(Error::config(
                "profile.v_max",
                format!("profile covers speeds up to {} but R = {bound}", profile.v_max()),
            ));
        }
        if self.kinetic.cells == 0 {
            return Err(Error::config("kinetic.cells", "must be >= 1"));
        }
        if let Some(dt) = self.kinetic.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("kinetic.dt", format!("must be > 0, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn slowing_profile(&self) -> Result<SlowingProfile> {
        SlowingProfile::new(self.profile.kind.clone(), self.profile.v_max).map_err(|e| match e {
            Error::Domain(m) | Error::Range(m) => Error::config("profile", m),
            other => other,
        })
    }

    /// Model parameters at obstacle radius `epsilon`.
    pub fn params(&self, epsilon: f64) -> Result<ModelParams> {
        ModelParams::new(self.dimension, epsilon, self.kappa, self.lambda)
    }

    /// Parameters at the smallest listed radius.
    pub fn finest_params(&self) -> Result<ModelParams> {
        self.params(*self.epsilons.last().expect("validated non-empty"))
    }

    /// Forward-solver step: the configured one or `0.01/(σR)`.
    pub fn forward_dt(&self) -> Result<f64> {
        let sigma = self.finest_params()?.sigma();
        Ok(self
            .kinetic
            .dt
            .unwrap_or(0.01 / (sigma * self.initial.bound()).max(f64::MIN_POSITIVE)))
    }
}

/// Pulls a field name out of messages such as ``missing field `kappa` ``.
fn field_from_message(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let end = start + message[start..].find('`')?;
    Some(message[start..end].to_string())
}

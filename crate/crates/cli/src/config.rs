//! Run configuration: a TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fockcut::convergence::StudyPlan;
use fockcut::models::ModelSpec;
use fockcut::DecayFunction;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn other(self) -> Format {
        match self {
            Format::Csv => Format::Json,
            Format::Json => Format::Csv,
        }
    }
}

/// Model names accepted by `--model`, each with default parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModelName {
    Free,
    Displaced,
    TwoMode,
    SpinBoson,
    SpinBosonMulti,
}

impl ModelName {
    pub fn spec(self) -> ModelSpec {
        match self {
            ModelName::Free => ModelSpec::Free,
            ModelName::Displaced => ModelSpec::Displaced { gamma: 0.2 },
            ModelName::TwoMode => ModelSpec::TwoMode,
            ModelName::SpinBoson => ModelSpec::SpinBoson { j: 0.5, gamma: 0.5, sites: 2, r: Some(2) },
            ModelName::SpinBosonMulti => ModelSpec::SpinBosonMulti { j: 0.5, gammas: vec![0.5, 0.3], sites: 2 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    /// Largest occupation `D` of the identity suite.
    #[serde(default = "default_ambient")]
    pub ambient_dim: usize,
    /// Identities are checked for every index up to this one.
    #[serde(default = "default_identity_range")]
    pub identity_range: usize,
    /// Levels kept above the largest cutoff; per-model default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<usize>,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { ambient_dim: default_ambient(), identity_range: default_identity_range(), guard: None }
    }
}

fn default_ambient() -> usize {
    40
}

fn default_identity_range() -> usize {
    30
}

fn default_ks() -> Vec<u32> {
    vec![0, 1, 2]
}

fn default_samples() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub decay: DecayFunction,
    #[serde(default = "default_ks")]
    pub ks: Vec<u32>,
    /// Per-model default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<usize>>,
    /// Linear sizes of the square spin lattices of a study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_sides: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub seed: u64,
    /// Random draws for the seeded checks of `verify`.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl RunConfig {
    pub fn new(model: ModelSpec) -> Self {
        RunConfig {
            model,
            truncation: Truncation::default(),
            decay: DecayFunction::default(),
            ks: default_ks(),
            times: None,
            cutoffs: None,
            lattice_sides: None,
            out: None,
            format: Format::default(),
            seed: 0,
            samples: default_samples(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone().unwrap_or_else(|| match self.model {
            ModelSpec::SpinBoson { .. } => vec![0.5],
            _ => vec![0.5, 1.0, 2.0],
        })
    }

    pub fn cutoffs(&self) -> Vec<usize> {
        self.cutoffs.clone().unwrap_or_else(|| match self.model {
            ModelSpec::Free => vec![3, 6, 12, 24],
            ModelSpec::Displaced { .. } => vec![4, 8, 16],
            ModelSpec::TwoMode => vec![2, 4, 6],
            ModelSpec::SpinBoson { .. } => vec![2, 4, 6],
            ModelSpec::SpinBosonMulti { .. } => vec![1, 2, 3],
        })
    }

    pub fn lattice_sides(&self) -> Vec<usize> {
        self.lattice_sides.clone().unwrap_or_else(|| vec![1, 2, 3])
    }

    pub fn guard(&self) -> usize {
        self.truncation.guard.unwrap_or(match self.model {
            ModelSpec::Free => 4,
            ModelSpec::Displaced { .. } | ModelSpec::TwoMode => 8,
            ModelSpec::SpinBoson { .. } => 4,
            ModelSpec::SpinBosonMulti { .. } => 2,
        })
    }

    pub fn plan(&self) -> StudyPlan {
        StudyPlan {
            model: self.model.clone(),
            decay: self.decay,
            ks: self.ks.clone(),
            times: self.times(),
            cutoffs: self.cutoffs(),
            lattice_sides: self.lattice_sides(),
            guard: self.guard(),
        }
    }

    /// Everything a command needs, checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.truncation;
        if t.ambient_dim < 2 {
            return Err(CliError::Config(format!("ambient_dim must be at least 2, got {}", t.ambient_dim)));
        }
        if t.identity_range + 1 > t.ambient_dim {
            return Err(CliError::Config(format!(
                "identity_range {} needs ambient_dim ≥ {}, got {}",
                t.identity_range,
                t.identity_range + 1,
                t.ambient_dim
            )));
        }
        if t.guard == Some(0) {
            return Err(CliError::Config("guard must be at least 1".into()));
        }
        if self.lattice_sides().iter().any(|&s| s == 0) {
            return Err(CliError::Config("lattice sides must be positive".into()));
        }
        let plan = self.plan();
        let bad = |e: fockcut::Error| CliError::Config(e.to_string());
        plan.model.validate().map_err(bad)?;
        plan.decay.validate().map_err(bad)?;
        if plan.times.is_empty() {
            return Err(CliError::Config("the time grid is empty".into()));
        }
        if plan.times.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("times must be finite".into()));
        }
        if plan.ks.is_empty() {
            return Err(CliError::Config("no seminorm powers k given".into()));
        }
        if plan.cutoffs.is_empty() {
            return Err(CliError::Config("no cutoffs given".into()));
        }
        Ok(())
    }

    /// Studies compare consecutive cutoffs, so they need at least two.
    pub fn validate_study(&self) -> Result<(), CliError> {
        self.validate()?;
        self.plan().validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_the_identity() {
        let mut cfg = RunConfig::new(ModelName::SpinBosonMulti.spec());
        cfg.times = Some(vec![0.1, 0.5, 2.0]);
        cfg.cutoffs = Some(vec![1, 3]);
        cfg.truncation.guard = Some(5);
        cfg.decay = DecayFunction::stretched(0.7);
        cfg.format = Format::Json;
        cfg.seed = 17;
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(RunConfig::parse(&back.to_toml().unwrap()).unwrap(), back);
    }

    #[test]
    fn only_the_model_is_required() {
        let cfg = RunConfig::parse("[model]\nkind = \"free\"\n").unwrap();
        assert_eq!(cfg, RunConfig::new(ModelSpec::Free));
        assert!(RunConfig::parse("seed = 3\n").is_err());
    }

    #[test]
    fn empty_time_grid_is_rejected() {
        let cfg = RunConfig::parse("times = []\n[model]\nkind = \"free\"\n").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(m)) if m.contains("time grid")));
    }

    #[test]
    fn identity_range_must_fit() {
        let mut cfg = RunConfig::new(ModelSpec::Free);
        cfg.truncation.ambient_dim = 2;
        cfg.truncation.identity_range = 5;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}

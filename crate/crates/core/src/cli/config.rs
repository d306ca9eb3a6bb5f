//! Run configuration: defaults, TOML file values and flag overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::FIXED_POINT_TOL;
use crate::catalog::{DEFAULT_RESOLUTION, MIN_RESOLUTION};
use crate::fields::forms::DEFAULT_STEP;
use crate::morse::HESSIAN_STEP;

pub const DEFAULT_TOL_STRUCTURE: f64 = 1e-10;
pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-6;
pub const DEFAULT_TOL_IDENTITY: f64 = 1e-5;
pub const DEFAULT_TOL_DEFICIENCY: f64 = 0.02;
pub const DEFAULT_OUT: &str = "gcconvex-out";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("invalid config file: {0}")]
    Parse(String),
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("no example given")]
    MissingExample,
}

/// Groups of checks selected by a subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckSet {
    CheckStructure,
    CheckHamiltonian,
    Morse,
    Convexity,
    Levels,
    All,
}

impl CheckSet {
    pub fn name(self) -> &'static str {
        match self {
            Self::CheckStructure => "check-structure",
            Self::CheckHamiltonian => "check-hamiltonian",
            Self::Morse => "morse",
            Self::Convexity => "convexity",
            Self::Levels => "levels",
            Self::All => "all",
        }
    }

    pub fn structure(self) -> bool {
        matches!(self, Self::CheckStructure | Self::All)
    }

    pub fn hamiltonian(self) -> bool {
        matches!(self, Self::CheckHamiltonian | Self::All)
    }

    pub fn morse(self) -> bool {
        matches!(self, Self::Morse | Self::All)
    }

    pub fn convexity(self) -> bool {
        matches!(self, Self::Convexity | Self::All)
    }

    pub fn levels(self) -> bool {
        matches!(self, Self::Levels | Self::All)
    }

    /// True when every selected check needs a torus action.
    pub fn needs_action(self) -> bool {
        !matches!(self, Self::CheckStructure | Self::All)
    }
}

/// Values read from a TOML config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub example: Option<String>,
    pub resolution: Option<usize>,
    pub step: Option<f64>,
    pub hessian_step: Option<f64>,
    pub tol_structure: Option<f64>,
    pub tol_residual: Option<f64>,
    pub tol_identity: Option<f64>,
    pub tol_fixed: Option<f64>,
    pub tol_hull: Option<f64>,
    pub tol_deficiency: Option<f64>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn read(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    /// Fills unset keys from `base`; values already set here win.
    pub fn or(self, base: FileConfig) -> FileConfig {
        FileConfig {
            example: self.example.or(base.example),
            resolution: self.resolution.or(base.resolution),
            step: self.step.or(base.step),
            hessian_step: self.hessian_step.or(base.hessian_step),
            tol_structure: self.tol_structure.or(base.tol_structure),
            tol_residual: self.tol_residual.or(base.tol_residual),
            tol_identity: self.tol_identity.or(base.tol_identity),
            tol_fixed: self.tol_fixed.or(base.tol_fixed),
            tol_hull: self.tol_hull.or(base.tol_hull),
            tol_deficiency: self.tol_deficiency.or(base.tol_deficiency),
            jobs: self.jobs.or(base.jobs),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: String,
    pub checks: CheckSet,
    pub resolution: usize,
    pub step: f64,
    pub hessian_step: f64,
    pub tol_structure: f64,
    pub tol_residual: f64,
    pub tol_identity: f64,
    pub tol_fixed: f64,
    /// Hull tolerance; derived from the sampling when unset.
    pub tol_hull: Option<f64>,
    pub tol_deficiency: f64,
    /// Worker threads; all available cores when unset.
    pub jobs: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

fn positive(field: &'static str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ConfigError::Invalid {
            field,
            reason: format!("{value} is not a positive number"),
        })
    }
}

impl RunConfig {
    /// Applies defaults to merged file and flag values and validates them.
    pub fn resolve(checks: CheckSet, values: FileConfig) -> Result<Self, ConfigError> {
        let example = values.example.ok_or(ConfigError::MissingExample)?;
        let resolution = values.resolution.unwrap_or(DEFAULT_RESOLUTION);
        if resolution < MIN_RESOLUTION {
            return Err(ConfigError::Invalid {
                field: "resolution",
                reason: format!("{resolution} is below the minimum {MIN_RESOLUTION}"),
            });
        }
        if values.jobs == Some(0) {
            return Err(ConfigError::Invalid {
                field: "jobs",
                reason: "must be at least 1".into(),
            });
        }
        Ok(Self {
            example,
            checks,
            resolution,
            step: positive("step", values.step.unwrap_or(DEFAULT_STEP))?,
            hessian_step: positive("hessian_step", values.hessian_step.unwrap_or(HESSIAN_STEP))?,
            tol_structure: positive(
                "tol_structure",
                values.tol_structure.unwrap_or(DEFAULT_TOL_STRUCTURE),
            )?,
            tol_residual: positive(
                "tol_residual",
                values.tol_residual.unwrap_or(DEFAULT_TOL_RESIDUAL),
            )?,
            tol_identity: positive(
                "tol_identity",
                values.tol_identity.unwrap_or(DEFAULT_TOL_IDENTITY),
            )?,
            tol_fixed: positive("tol_fixed", values.tol_fixed.unwrap_or(FIXED_POINT_TOL))?,
            tol_hull: values
                .tol_hull
                .map(|t| positive("tol_hull", t))
                .transpose()?,
            tol_deficiency: positive(
                "tol_deficiency",
                values.tol_deficiency.unwrap_or(DEFAULT_TOL_DEFICIENCY),
            )?,
            jobs: values.jobs,
            seed: values.seed.unwrap_or(0),
            out: values.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        })
    }
}

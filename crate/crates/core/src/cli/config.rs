//! Experiment configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::conformal::DEFAULT_EPS;
use crate::eigensolve::DEFAULT_TOL;
use crate::inequalities::DEFAULT_BOUND_TOL;
use crate::profile::{ProfileRecipe, ProfileSpec, DEFAULT_RESOLUTION, DEFAULT_T_BODY, DEFAULT_W_TAPER};
use crate::spectra::OperatorKind;

/// Environment variable holding the default worker count.
pub const JOBS_ENV: &str = "PINOCCHIO_JOBS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Pinocchio,
    Round,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OperatorChoice {
    Dirac,
    Laplace,
    Yamabe,
}

impl From<OperatorChoice> for OperatorKind {
    fn from(c: OperatorChoice) -> Self {
        match c {
            OperatorChoice::Dirac => OperatorKind::Dirac,
            OperatorChoice::Laplace => OperatorKind::LaplaceFunctions,
            OperatorChoice::Yamabe => OperatorKind::Yamabe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub profile: ProfileKind,
    /// Radius of the round sphere.
    pub radius: f64,
    pub r: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub k: usize,
    pub t_body: f64,
    pub w_taper: f64,
    /// `None` selects `0.1 r`.
    pub w_blend: Option<f64>,
    pub operator: OperatorChoice,
    pub eps: Vec<f64>,
    /// Radial Yamabe eigenfunction indices for the epsilon sweep.
    pub modes: Vec<usize>,
    pub sweep_r: Vec<f64>,
    #[serde(rename = "sweep_L")]
    pub sweep_l: Vec<f64>,
    pub out: PathBuf,
    pub tol: f64,
    pub bound_tol: f64,
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 3,
            profile: ProfileKind::Pinocchio,
            radius: 1.0,
            r: 0.1,
            l: 100.0,
            resolution: DEFAULT_RESOLUTION,
            k: 10,
            t_body: DEFAULT_T_BODY,
            w_taper: DEFAULT_W_TAPER,
            w_blend: None,
            operator: OperatorChoice::Dirac,
            eps: DEFAULT_EPS.to_vec(),
            modes: vec![0, 1, 2],
            sweep_r: vec![0.1],
            sweep_l: vec![1.0, 10.0, 50.0, 100.0],
            out: PathBuf::from("out"),
            tol: DEFAULT_TOL,
            bound_tol: DEFAULT_BOUND_TOL,
            jobs: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn pinocchio_spec(&self) -> ProfileSpec {
        let mut spec = ProfileSpec::new(self.n, self.r, self.l)
            .with_body(self.t_body, self.w_taper)
            .with_resolution(self.resolution);
        if let Some(w) = self.w_blend {
            spec = spec.with_blend(w);
        }
        spec
    }

    pub fn recipe(&self) -> ProfileRecipe {
        match self.profile {
            ProfileKind::Pinocchio => ProfileRecipe::Pinocchio(self.pinocchio_spec()),
            ProfileKind::Round => ProfileRecipe::Round {
                n: self.n,
                radius: self.radius,
                resolution: self.resolution,
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::Invalid("k must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError::Invalid("tol must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub profile: Option<ProfileKind>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Neck radius; a comma-separated list sets the sweep grid.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub r: Option<Vec<f64>>,
    /// Neck length; a comma-separated list sets the sweep grid.
    #[arg(long = "L", global = true, value_delimiter = ',', num_args = 0..)]
    pub l: Option<Vec<f64>>,
    /// Grid cells per unit length.
    #[arg(long = "N", global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long = "t-body", global = true)]
    pub t_body: Option<f64>,
    #[arg(long = "w-taper", global = true)]
    pub w_taper: Option<f64>,
    #[arg(long = "w-blend", global = true)]
    pub w_blend: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub operator: Option<OperatorChoice>,
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub eps: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub modes: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long = "bound-tol", global = true)]
    pub bound_tol: Option<f64>,
    #[arg(long, global = true, env = JOBS_ENV)]
    pub jobs: Option<usize>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! take {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$target = v; })*
            };
        }
        take!(n => n, profile => profile, radius => radius, resolution => resolution, k => k,
              t_body => t_body, w_taper => w_taper, operator => operator, eps => eps,
              modes => modes, out => out, tol => tol, bound_tol => bound_tol);
        if let Some(w) = self.w_blend {
            cfg.w_blend = Some(w);
        }
        if let Some(j) = self.jobs {
            cfg.jobs = Some(j);
        }
        if let Some(rs) = &self.r {
            if let Some(&first) = rs.first() {
                cfg.r = first;
            }
            cfg.sweep_r = rs.clone();
        }
        if let Some(ls) = &self.l {
            if let Some(&first) = ls.first() {
                cfg.l = first;
            }
            cfg.sweep_l = ls.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

//! Run configuration: fixture files (JSON) merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Poisson,
    Groupoid,
    Bm,
    Desing,
    Cosymplectic,
    Eform,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Poisson => "poisson",
            Suite::Groupoid => "groupoid",
            Suite::Bm => "bm",
            Suite::Desing => "desing",
            Suite::Cosymplectic => "cosymplectic",
            Suite::Eform => "eform",
            Suite::All => "all",
        }
    }

    pub fn members(self) -> Vec<Suite> {
        use Suite::*;
        match self {
            All => vec![Poisson, Groupoid, Bm, Desing, Cosymplectic, Eform],
            s => vec![s],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `alpha(a, x)` of the generator.
    Alpha,
    /// Coefficients of the groupoid bivector.
    Pi,
    /// The bump `g_eps(x)` for each `eps`.
    #[value(name = "g_eps", alias = "g-eps")]
    GEps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Monomial,
    Sine,
}

/// Everything a run needs. Fixture files hold any subset of these fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fixture: String,
    pub suite: Suite,
    pub m: u32,
    pub k: u32,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub probes: usize,
    pub tol_scale: f64,
    pub out: PathBuf,
    /// Half-widths of the `a` and `x` chart directions.
    pub a_max: f64,
    pub x_max: f64,
    pub quantity: Quantity,
    pub generator: GeneratorKind,
    /// Grid nodes per axis for `surface`.
    pub nodes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fixture: "default".into(),
            suite: Suite::All,
            m: 2,
            k: 1,
            eps: vec![0.3, 0.1],
            seed: 0,
            probes: 64,
            tol_scale: 1.0,
            out: PathBuf::from("out"),
            a_max: 0.8,
            x_max: 0.8,
            quantity: Quantity::Alpha,
            generator: GeneratorKind::Monomial,
            nodes: 21,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        if cfg.fixture == "default" {
            if let Some(stem) = path.file_stem() {
                cfg.fixture = stem.to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return Err(ConfigError(format!("tol-scale must be positive, got {}", self.tol_scale)));
        }
        if self.probes < 8 {
            return Err(ConfigError(format!("at least 8 probes are required, got {}", self.probes)));
        }
        if self.m == 0 {
            return Err(ConfigError("m must be at least 1".into()));
        }
        if self.k == 0 || self.k > 4 {
            return Err(ConfigError(format!("k must be in 1..=4, got {}", self.k)));
        }
        if self.eps.iter().any(|e| !e.is_finite() || e.abs() >= 1.0) {
            return Err(ConfigError("eps values must lie in (-1, 1)".into()));
        }
        if !(self.a_max > 0.0 && self.x_max > 0.0 && self.a_max.is_finite() && self.x_max.is_finite()) {
            return Err(ConfigError("chart half-widths must be positive".into()));
        }
        Ok(())
    }
}

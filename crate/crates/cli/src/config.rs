//! JSON experiment configs. Every command reads one record; errors point at
//! the offending line of the file.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use specquant::{
    DEFAULT_SEED, EstimateKind, Estimator, PowerDesign, SpectralModel, WindowSpec,
};

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn hundred() -> usize {
    100
}

fn default_alpha() -> f64 {
    0.1
}

fn one() -> usize {
    1
}

/// A model with an optional display name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: SpectralModel,
}

impl NamedModel {
    pub fn new(name: &str, model: SpectralModel) -> Self {
        Self {
            name: Some(name.to_string()),
            model,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.model.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateRows {
    /// One row per (model, n, p) cell.
    #[default]
    Summary,
    /// One row per replicate and p.
    Estimates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub models: Vec<NamedModel>,
    pub p: Vec<f64>,
    pub n: Vec<usize>,
    #[serde(default = "hundred")]
    pub replications: usize,
    #[serde(default = "raw_kind")]
    pub estimator: EstimateKind,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub rows: EstimateRows,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
}

fn raw_kind() -> EstimateKind {
    EstimateKind::Raw
}

impl EstimateConfig {
    pub fn estimator(&self) -> Estimator {
        match self.estimator {
            EstimateKind::Raw => Estimator::Raw,
            EstimateKind::Smoothed => Estimator::Smoothed {
                window: self.window,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    pub null: NamedModel,
    pub p: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "hundred")]
    pub sigma_replications: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    /// Series CSV; `--input` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub models: Vec<NamedModel>,
    pub p: Vec<f64>,
    #[serde(default = "fifty")]
    pub n: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "hundred")]
    pub replications: usize,
    #[serde(default = "hundred")]
    pub sigma_replications: usize,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
}

fn fifty() -> usize {
    50
}

impl PowerConfig {
    pub fn design(&self, p: f64) -> PowerDesign {
        PowerDesign {
            p,
            n: self.n,
            alpha: self.alpha,
            replications: self.replications,
            sigma_replications: self.sigma_replications,
            window: self.window,
            base_seed: self.base_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: NamedModel,
    pub n: usize,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnConfig {
    pub lambda: f64,
    pub betas: Vec<f64>,
    pub n: Vec<usize>,
    #[serde(default = "two_thousand")]
    pub replications: usize,
}

fn two_thousand() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLimitConfig {
    pub p: f64,
    pub n: Vec<usize>,
    #[serde(default = "thousand")]
    pub replications: usize,
    #[serde(default)]
    pub window: WindowSpec,
}

fn thousand() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub model: NamedModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tn: Option<TnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_limit: Option<RawLimitConfig>,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
}

/// A semantic problem with one field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    /// Dotted path, e.g. `window.m` or `p[2]`.
    pub path: String,
    pub message: String,
}

fn field(path: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError {
        path: path.into(),
        message: message.into(),
    }
}

/// Checks that must pass before any simulation starts.
pub trait Validate {
    fn validate(&self) -> Result<(), FieldError>;
    fn base_seed_mut(&mut self) -> &mut u64;
}

fn check_p(path: &str, p: f64) -> Result<(), FieldError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(field(path, format!("p = {p} must lie in [0, 1]")))
    }
}

fn check_ps(ps: &[f64]) -> Result<(), FieldError> {
    if ps.is_empty() {
        return Err(field("p", "at least one p is required"));
    }
    for (i, &p) in ps.iter().enumerate() {
        check_p(&format!("p[{i}]"), p)?;
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), FieldError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(field("alpha", format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

fn check_n(path: &str, n: usize) -> Result<(), FieldError> {
    if n >= 2 {
        Ok(())
    } else {
        Err(field(path, format!("sample size {n} must be >= 2")))
    }
}

fn check_window(path: &str, window: &WindowSpec, n: usize) -> Result<(), FieldError> {
    window
        .resolve(n)
        .map(|_| ())
        .map_err(|e| field(format!("{path}.m"), e.to_string()))
}

fn check_reps(path: &str, reps: usize, min: usize) -> Result<(), FieldError> {
    if reps >= min {
        Ok(())
    } else {
        Err(field(path, format!("{reps} must be >= {min}")))
    }
}

impl Validate for EstimateConfig {
    fn validate(&self) -> Result<(), FieldError> {
        if self.models.is_empty() {
            return Err(field("models", "at least one model is required"));
        }
        check_ps(&self.p)?;
        if self.n.is_empty() {
            return Err(field("n", "at least one sample size is required"));
        }
        for (i, &n) in self.n.iter().enumerate() {
            check_n(&format!("n[{i}]"), n)?;
            if self.estimator == EstimateKind::Smoothed {
                check_window("window", &self.window, n)?;
            }
        }
        check_reps("replications", self.replications, 1)
    }

    fn base_seed_mut(&mut self) -> &mut u64 {
        &mut self.base_seed
    }
}

impl Validate for TestConfig {
    fn validate(&self) -> Result<(), FieldError> {
        check_p("p", self.p)?;
        check_alpha(self.alpha)?;
        check_reps("sigma_replications", self.sigma_replications, 2)
    }

    fn base_seed_mut(&mut self) -> &mut u64 {
        &mut self.base_seed
    }
}

impl Validate for PowerConfig {
    fn validate(&self) -> Result<(), FieldError> {
        if self.models.is_empty() {
            return Err(field("models", "at least one model is required"));
        }
        check_ps(&self.p)?;
        check_n("n", self.n)?;
        check_alpha(self.alpha)?;
        check_window("window", &self.window, self.n)?;
        check_reps("replications", self.replications, 1)?;
        check_reps("sigma_replications", self.sigma_replications, 2)
    }

    fn base_seed_mut(&mut self) -> &mut u64 {
        &mut self.base_seed
    }
}

impl Validate for SimulateConfig {
    fn validate(&self) -> Result<(), FieldError> {
        check_n("n", self.n)?;
        check_reps("replications", self.replications, 1)
    }

    fn base_seed_mut(&mut self) -> &mut u64 {
        &mut self.base_seed
    }
}

impl Validate for DiagnoseConfig {
    fn validate(&self) -> Result<(), FieldError> {
        if self.tn.is_none() && self.raw_limit.is_none() {
            return Err(field("tn", "at least one of `tn` and `raw_limit` is required"));
        }
        if !self.model.model.atoms().is_empty() {
            return Err(field("model", "diagnostics need a Gaussian model without sinusoids"));
        }
        if let Some(tn) = &self.tn {
            if !(tn.lambda > -PI && tn.lambda < PI) {
                return Err(field("tn.lambda", format!("lambda = {} must lie in (-pi, pi)", tn.lambda)));
            }
            if tn.betas.is_empty() || tn.betas.iter().any(|b| !(*b > 0.0)) {
                return Err(field("tn.betas", "betas must be a non-empty list of positive numbers"));
            }
            for (i, &n) in tn.n.iter().enumerate() {
                check_n(&format!("tn.n[{i}]"), n)?;
                for &beta in &tn.betas {
                    if tn.lambda + (n as f64).powf(-beta) > PI {
                        return Err(field(
                            format!("tn.n[{i}]"),
                            format!("lambda + n^-beta exceeds pi for n = {n}, beta = {beta}"),
                        ));
                    }
                }
            }
            check_reps("tn.replications", tn.replications, 2)?;
        }
        if let Some(rl) = &self.raw_limit {
            check_p("raw_limit.p", rl.p)?;
            for (i, &n) in rl.n.iter().enumerate() {
                check_n(&format!("raw_limit.n[{i}]"), n)?;
                check_window("raw_limit.window", &rl.window, n)?;
            }
            check_reps("raw_limit.replications", rl.replications, 2)?;
        }
        Ok(())
    }

    fn base_seed_mut(&mut self) -> &mut u64 {
        &mut self.base_seed
    }
}

/// Config problem with a position in the source text when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.origin, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.origin, self.message),
            _ => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Line (1-based) of the first `"key":` whose key is the last segment of
/// `path` (`window.m` -> `m`, `p[2]` -> `p`).
pub fn locate(text: &str, path: &str) -> Option<usize> {
    let last = path.rsplit('.').next()?;
    let key = last.split('[').next()?;
    let needle = format!("\"{key}\"");
    text.lines().position(|l| {
        l.find(&needle)
            .is_some_and(|i| l[i + needle.len()..].trim_start().starts_with(':'))
    })
    .map(|i| i + 1)
}

/// Parses and validates `text`. `origin` names the source in messages.
pub fn parse<T: DeserializeOwned + Validate>(text: &str, origin: &str) -> Result<T, ConfigError> {
    let config: T = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        let message = match message.rsplit_once(" at line ") {
            Some((head, _)) => head.to_string(),
            None => message,
        };
        ConfigError {
            origin: origin.to_string(),
            line: Some(e.line()).filter(|&l| l > 0),
            column: Some(e.column()).filter(|&c| c > 0),
            message,
        }
    })?;
    config.validate().map_err(|fe| ConfigError {
        origin: origin.to_string(),
        line: locate(text, &fe.path),
        column: None,
        message: format!("{}: {}", fe.path, fe.message),
    })?;
    Ok(config)
}

pub fn load<T: DeserializeOwned + Validate>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    Ok(parse(&text, &path.display().to_string())?)
}

//! Experiment configuration: TOML schema, validation, and defaults.
//!
//! A config names a target function, noise level, one or more dictionaries,
//! one or more methods, and the hyperparameter selection rule.  Example:
//!
//! ```toml
//! mode = "benchmark"
//! label = "smooth_target"
//! output_dir = "out/smooth_target"
//! base_seed = 20240501
//! trial_count = 10
//! train_size = 5000
//! test_size = 5000
//! noise_sigma = 0.1
//! target = "f1"
//!
//! [[dictionaries]]
//! kind = "grd"
//! size = 500
//! shape = 200.0
//!
//! [[methods]]
//! kind = "osga"
//! step_size = 1
//! max_iterations = 60
//!
//! [selector]
//! rule = "test_min"
//! ```
//!
//! The `OSGA_OUT_DIR` environment variable overrides `output_dir` (and only
//! that) without touching the file.

use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Environment variable that overrides the config's output directory.
pub const OUT_DIR_ENV: &str = "OSGA_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Benchmark,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// `noise_sigma` is the noise standard deviation (the default).
    #[default]
    Stddev,
    /// `noise_sigma` is the noise variance.
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    F1,
    F2,
}

impl TargetKind {
    pub fn label(self) -> &'static str {
        match self {
            TargetKind::F1 => "f1",
            TargetKind::F2 => "f2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    /// Gaussian radial dictionary: random centers, fixed shape.
    Grd,
    /// Trigonometric dictionary `cos(k x)`, `k = 1..=size`.
    Tpd,
}

impl DictionaryKind {
    pub fn label(self) -> &'static str {
        match self {
            DictionaryKind::Grd => "grd",
            DictionaryKind::Tpd => "tpd",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryConfig {
    pub kind: DictionaryKind,
    /// Number of atoms.
    pub size: u32,
    /// Gaussian shape parameter; required for `grd`, ignored for `tpd`.
    #[serde(default)]
    pub shape: Option<f64>,
    /// Fixed seed for the Gaussian centers; when absent, centers are redrawn
    /// per trial from the trial's seed stream.
    #[serde(default)]
    pub center_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Osga,
    Ridge,
    Lasso,
    Half,
    L2boost,
}

impl MethodKind {
    pub fn label(self) -> &'static str {
        match self {
            MethodKind::Osga => "osga",
            MethodKind::Ridge => "ridge",
            MethodKind::Lasso => "lasso",
            MethodKind::Half => "half",
            MethodKind::L2boost => "l2boost",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: MethodKind,
    /// Atoms per iteration; `osga` only (default 1).
    #[serde(default)]
    pub step_size: Option<usize>,
    /// Iteration budget: greedy iterations, ISTA iterations, or boosting
    /// steps depending on the method.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    /// Step size for ISTA / boosting; defaults follow the library.
    #[serde(default)]
    pub step_nu: Option<f64>,
    /// Penalty grid for ridge/lasso/half; defaults to `2^-10 .. 2^10`.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// ISTA convergence tolerance on the largest coefficient change.
    #[serde(default)]
    pub convergence_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorRule {
    /// Pick the iterate/penalty minimizing RMSE on the noise-free test set.
    TestMin,
    /// Penalized truncated empirical risk (greedy methods only).
    L0Penalty,
    /// Validation RMSE on a held-out slice of the training data.
    Holdout,
    /// Keep the full iteration budget.
    Fixed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectorConfig {
    pub rule: SelectorRule,
    /// Complexity weight for the penalized rule.
    pub kappa: f64,
    /// Fraction of the training set held out under the holdout rule.
    pub holdout_fraction: f64,
    /// Evaluate test RMSE on truncated predictions.
    pub truncate: bool,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            rule: SelectorRule::TestMin,
            kappa: 0.1,
            holdout_fraction: 0.2,
            truncate: false,
        }
    }
}

fn default_emit_figures() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Short name used in figure titles.
    pub label: String,
    pub output_dir: PathBuf,
    pub base_seed: u64,
    pub trial_count: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Noise level; interpreted per `noise_scale`.
    pub noise_sigma: f64,
    #[serde(default)]
    pub noise_scale: NoiseScale,
    pub target: TargetKind,
    pub dictionaries: Vec<DictionaryConfig>,
    pub methods: Vec<MethodConfig>,
    #[serde(default)]
    pub selector: SelectorConfig,
    #[serde(default = "default_emit_figures")]
    pub emit_figures: bool,
}

impl ExperimentConfig {
    /// Noise standard deviation after applying the scale convention.
    pub fn noise_stddev(&self) -> f64 {
        match self.noise_scale {
            NoiseScale::Stddev => self.noise_sigma,
            NoiseScale::Variance => self.noise_sigma.sqrt(),
        }
    }

    /// Parse and validate a TOML config file, applying the output-directory
    /// environment override.
    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parse and validate config text.
    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                config.output_dir = PathBuf::from(dir);
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Check the cross-field rules the schema cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError(msg));
        if self.trial_count < 1 {
            return fail("trial_count must be at least 1".into());
        }
        if self.train_size < 1 || self.test_size < 1 {
            return fail("train_size and test_size must be at least 1".into());
        }
        if self.noise_sigma < 0.0 || self.noise_sigma.is_nan() {
            return fail(format!("noise_sigma must be nonnegative, got {}", self.noise_sigma));
        }
        if self.dictionaries.is_empty() {
            return fail("at least one [[dictionaries]] entry is required".into());
        }
        if self.methods.is_empty() {
            return fail("at least one [[methods]] entry is required".into());
        }
        for (i, d) in self.dictionaries.iter().enumerate() {
            if d.size == 0 {
                return fail(format!("dictionaries[{i}]: size must be positive"));
            }
            match d.kind {
                DictionaryKind::Grd => {
                    let shape = d.shape.unwrap_or(0.0);
                    if shape <= 0.0 || shape.is_nan() {
                        return fail(format!(
                            "dictionaries[{i}]: grd requires a positive shape"
                        ));
                    }
                }
                DictionaryKind::Tpd => {}
            }
            if self.dictionaries[..i].iter().any(|prior| prior.kind == d.kind) {
                return fail(format!(
                    "dictionaries[{i}]: duplicate kind '{}'; result rows are keyed \
                     by dictionary kind",
                    d.kind.label()
                ));
            }
        }
        for (i, m) in self.methods.iter().enumerate() {
            if let Some(s) = m.step_size {
                if s < 1 {
                    return fail(format!("methods[{i}]: step_size must be at least 1"));
                }
                if m.kind != MethodKind::Osga {
                    return fail(format!(
                        "methods[{i}]: step_size only applies to osga"
                    ));
                }
            }
            if m.max_iterations == Some(0) {
                return fail(format!("methods[{i}]: max_iterations must be positive"));
            }
            if let Some(lambdas) = &m.lambdas {
                if lambdas.is_empty() {
                    return fail(format!("methods[{i}]: lambdas must be nonempty"));
                }
            }
            let same_key = |other: &MethodConfig| {
                other.kind == m.kind
                    && other.step_size.unwrap_or(1) == m.step_size.unwrap_or(1)
            };
            if self.methods[..i].iter().any(same_key) {
                return fail(format!(
                    "methods[{i}]: duplicate entry for '{}'; result rows are keyed \
                     by method kind and step size",
                    m.kind.label()
                ));
            }
        }
        if self.selector.kappa < 0.0 || self.selector.kappa.is_nan() {
            return fail(format!(
                "selector.kappa must be nonnegative, got {}",
                self.selector.kappa
            ));
        }
        if !(self.selector.holdout_fraction > 0.0 && self.selector.holdout_fraction < 1.0) {
            return fail(format!(
                "selector.holdout_fraction must be in (0, 1), got {}",
                self.selector.holdout_fraction
            ));
        }
        Ok(())
    }
}

/// A configuration problem: unreadable file, bad syntax, or invalid values.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

//! Experiment configuration: one TOML or JSON document (detected by file
//! extension) validated in full before any computation starts.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use dunkl_lab::inequality_lab::catalog::{CheckContext, EstimatorChoice};
use dunkl_lab::root_system::RootSystem;
use dunkl_lab::sampler::Algo;

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "cannot parse config: {e}"),
            ConfigError::Invalid(e) => write!(f, "invalid config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Check name from the catalogue (used by the `check` subcommand).
    #[serde(default)]
    pub check: Option<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub root_system: RootSystemConfig,
    pub measure: MeasureConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub suite: SuiteConfig,
}

fn default_output_dir() -> String {
    "out".into()
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootSystemConfig {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default)]
    pub positive_roots: Vec<Vec<f64>>,
    #[serde(default)]
    pub multiplicities: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub p: f64,
    #[serde(default)]
    pub chamber: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default = "default_estimator_kind")]
    pub kind: String,
    #[serde(default)]
    pub resolution: usize,
    #[serde(default)]
    pub box_half_width: f64,
    #[serde(default = "default_mcmc_n")]
    pub n: usize,
    #[serde(default = "default_mcmc_chains")]
    pub chains: usize,
    #[serde(default = "default_algo")]
    pub algo: String,
}

fn default_estimator_kind() -> String {
    "quadrature".into()
}

fn default_mcmc_n() -> usize {
    100_000
}

fn default_mcmc_chains() -> usize {
    4
}

fn default_algo() -> String {
    "rwm".into()
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: default_estimator_kind(),
            resolution: 0,
            box_half_width: 0.0,
            n: default_mcmc_n(),
            chains: default_mcmc_chains(),
            algo: default_algo(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub max_degree: u32,
    #[serde(default = "default_combos")]
    pub random_combos: usize,
}

fn default_combos() -> usize {
    200
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|e| ConfigError::Parse(format!("config is not UTF-8: {e}")))?;
        let config: ExperimentConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| ConfigError::Parse(format!("{e} (JSON)")))?,
            _ => toml::from_str(&text)
                .map_err(|e| ConfigError::Parse(format!("{e} (TOML)")))?,
        };
        config.validate()?;
        Ok((config, bytes))
    }

    /// Validate every field before any computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.root_system.kind.as_str() {
            "a" | "b" => {
                if self.root_system.n < 2 {
                    return Err(ConfigError::Invalid(format!(
                        "root_system.n must be at least 2 for type {}, got {}",
                        self.root_system.kind, self.root_system.n
                    )));
                }
            }
            "rank1" => {}
            "custom" => {
                if self.root_system.positive_roots.is_empty() {
                    return Err(ConfigError::Invalid(
                        "custom root systems need positive_roots".into(),
                    ));
                }
                if self.root_system.positive_roots.len() != self.root_system.multiplicities.len() {
                    return Err(ConfigError::Invalid(
                        "positive_roots and multiplicities must have matching lengths".into(),
                    ));
                }
            }
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown root_system.type '{other}' (expected a, b, rank1 or custom)"
                )));
            }
        }
        for k in [self.root_system.k, self.root_system.k1, self.root_system.k2] {
            if !k.is_finite() || k < 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "multiplicities must be finite and nonnegative, got {k}"
                )));
            }
        }
        if !(self.measure.p > 1.0) {
            return Err(ConfigError::Invalid(format!(
                "measure.p must exceed 1, got {}",
                self.measure.p
            )));
        }
        match self.estimator.kind.as_str() {
            "quadrature" | "mcmc" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown estimator.kind '{other}' (expected quadrature or mcmc)"
                )));
            }
        }
        match self.estimator.algo.as_str() {
            "rwm" | "langevin" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown estimator.algo '{other}' (expected rwm or langevin)"
                )));
            }
        }
        if self.estimator.kind == "mcmc" && self.estimator.n == 0 {
            return Err(ConfigError::Invalid("estimator.n must be positive".into()));
        }
        if self.estimator.kind == "mcmc" && self.estimator.chains == 0 {
            return Err(ConfigError::Invalid("estimator.chains must be positive".into()));
        }
        Ok(())
    }

    pub fn build_root_system(&self) -> Result<Arc<RootSystem>, ConfigError> {
        let rs = match self.root_system.kind.as_str() {
            "a" => RootSystem::build_type_a(self.root_system.n, self.root_system.k),
            "b" => RootSystem::build_type_b(self.root_system.n, self.root_system.k1, self.root_system.k2),
            "rank1" => RootSystem::rank_one(self.root_system.k),
            "custom" => RootSystem::build_custom(
                self.root_system.positive_roots.clone(),
                self.root_system.multiplicities.clone(),
            ),
            _ => unreachable!("validated"),
        }
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Arc::new(rs))
    }

    pub fn algo(&self) -> Algo {
        match self.estimator.algo.as_str() {
            "langevin" => Algo::Langevin,
            _ => Algo::Rwm,
        }
    }

    pub fn estimator_choice(&self, rs: &RootSystem) -> EstimatorChoice {
        match self.estimator.kind.as_str() {
            "mcmc" => EstimatorChoice::Mcmc {
                n: self.estimator.n,
                chains: self.estimator.chains,
                algo: self.algo(),
            },
            _ => EstimatorChoice::Quadrature {
                resolution: if self.estimator.resolution > 0 {
                    self.estimator.resolution
                } else if rs.dim() >= 3 {
                    8
                } else {
                    16
                },
                box_half_width: if self.estimator.box_half_width > 0.0 {
                    Some(self.estimator.box_half_width)
                } else {
                    None
                },
            },
        }
    }

    pub fn check_context(&self, seed_override: Option<u64>) -> Result<CheckContext, ConfigError> {
        let rs = self.build_root_system()?;
        let mut ctx = CheckContext::new(rs.clone(), self.measure.p);
        ctx.chamber = self.measure.chamber;
        ctx.estimator = self.estimator_choice(&rs);
        ctx.seed = seed_override.unwrap_or(self.seed);
        ctx.max_degree = self.suite.max_degree;
        ctx.n_random_combos = self.suite.random_combos;
        Ok(ctx)
    }
}

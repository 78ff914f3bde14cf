//! Pipeline configuration: one TOML file with a section per stage. Every
//! field has a default, so an empty file is a valid config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::inference::{DegenerateThresholds, EndpointConfig, MockModel};
use crate::partition::{
    SamplingMode, SamplingOptions, SplitFractions, StrategySearch, StratVariable, DEFAULT_PERCENTILE_ATTRIBUTES,
};
use crate::promptgen::TokenRounding;
use crate::seeds;

/// Environment variable read for the endpoint API key.
pub const API_KEY_ENV: &str = "CTRLSIMP_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Where subcommands put their outputs when no explicit path is given.
    pub work_dir: PathBuf,
    /// Prompt template directory; unset means the bundled templates.
    pub templates: Option<PathBuf>,
    /// Familiar-word list for Dale-Chall; unset means the bundled list.
    pub familiar_words: Option<PathBuf>,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            work_dir: PathBuf::from("work"),
            templates: None,
            familiar_words: None,
            reports: PathBuf::from("reports"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub lower_percentile: f64,
    pub upper_percentile: f64,
    pub attributes: Vec<StratVariable>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            lower_percentile: 1.0,
            upper_percentile: 99.0,
            attributes: DEFAULT_PERCENTILE_ATTRIBUTES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyGrid {
    pub variables: Vec<StratVariable>,
    pub bins: Vec<usize>,
    /// Used by `split` without a strategy search.
    pub variable: StratVariable,
    pub default_bins: usize,
}

impl Default for StrategyGrid {
    fn default() -> Self {
        let s = StrategySearch::default();
        Self {
            variables: s.variables,
            bins: s.bins,
            variable: StratVariable::Fkgl,
            default_bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub variable: StratVariable,
    /// `start:end:step` or a comma list.
    pub sizes: String,
    pub modes: Vec<SamplingMode>,
    pub strata: usize,
    pub jsd_bins: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let o = SamplingOptions::default();
        Self {
            variable: StratVariable::Fkgl,
            sizes: "100:3100:20".into(),
            modes: SamplingMode::ALL.to_vec(),
            strata: o.strata,
            jsd_bins: o.jsd_bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    pub partitioning: Vec<u64>,
    pub downsampling: Vec<u64>,
    pub evaluation: Vec<u64>,
    /// Coin flips of the dual-subset merge.
    pub merge: u64,
    /// System-prompt variant choice.
    pub prompts: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            partitioning: seeds::PARTITIONING.to_vec(),
            downsampling: seeds::DOWNSAMPLING.to_vec(),
            evaluation: seeds::EVALUATION.to_vec(),
            merge: 0,
            prompts: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    pub rounding: TokenRounding,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    /// Offline model (`oracle`, `echo`, `truncate_p:<p>`, `degenerate`).
    /// Unset means the HTTP endpoint.
    pub mock: Option<String>,
    pub parallel_runs: bool,
    pub degenerate: DegenerateThresholds,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub split: SplitFractions,
    pub filter: FilterConfig,
    pub strategy: StrategyGrid,
    pub sampling: SamplingConfig,
    pub seeds: SeedConfig,
    pub prompts: PromptConfig,
    pub endpoint: EndpointConfig,
    pub inference: InferenceConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            source: Box::new(e),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.split.validate().is_err() {
            return bad(format!("split fractions {:?} must be non-negative and sum to 1", self.split.as_array()));
        }
        let (lo, hi) = (self.filter.lower_percentile, self.filter.upper_percentile);
        if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
            return bad(format!("percentile bounds {lo}..{hi} must satisfy 0 <= lo < hi <= 100"));
        }
        for (name, list) in [
            ("partitioning", &self.seeds.partitioning),
            ("downsampling", &self.seeds.downsampling),
            ("evaluation", &self.seeds.evaluation),
        ] {
            if list.is_empty() {
                return bad(format!("seed list {name} is empty"));
            }
        }
        if self.strategy.variables.is_empty() || self.strategy.bins.is_empty() || self.strategy.bins.contains(&0) {
            return bad("strategy grid needs at least one variable and positive bin counts".into());
        }
        if self.strategy.default_bins == 0 || self.sampling.strata == 0 || self.sampling.jsd_bins == 0 {
            return bad("bin and stratum counts must be positive".into());
        }
        if let Err(e) = crate::partition::parse_sizes(&self.sampling.sizes) {
            return bad(e.to_string());
        }
        if let Some(m) = &self.inference.mock {
            if let Err(e) = m.parse::<MockModel>() {
                return bad(e.to_string());
            }
        }
        self.endpoint.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn strategy_search(&self) -> StrategySearch {
        StrategySearch {
            variables: self.strategy.variables.clone(),
            bins: self.strategy.bins.clone(),
            seeds: self.seeds.partitioning.clone(),
            fractions: self.split,
        }
    }

    pub fn sampling_options(&self) -> SamplingOptions {
        SamplingOptions {
            strata: self.sampling.strata,
            fractions: self.split,
            jsd_bins: self.sampling.jsd_bins,
        }
    }
}

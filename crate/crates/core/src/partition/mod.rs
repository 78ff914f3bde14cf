//! Outlier filtering, stratified train/dev/test splitting, strategy search,
//! subsampling experiments and monotonic filtering.

mod filter;
mod sampling;
mod split;
mod strata;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AttributeVector, Split};
use crate::divergence::DivergenceError;

pub use filter::{
    mono_filter, percentile_filter, percentile_nearest, DatasetMonoStats, MonoStats, PercentileStats,
    DEFAULT_PERCENTILE_ATTRIBUTES,
};
pub use sampling::{
    parse_sizes, sampling_experiment, subsample, write_curves_csv, AttributeDivergence, SamplingCurve,
    SamplingMode, SamplingOptions, SamplingPoint, UnknownMode,
};
pub use split::{
    select_strategy, stratified_split, write_score_table_csv, ScoreRow, SplitResult, StrategyOutcome,
    StrategyScore, StrategySearch,
};

#[derive(Debug, thiserror::Error)]
pub enum PartitionError {
    #[error("empty input")]
    Empty,
    #[error("need at least {min} pairs, got {got}")]
    TooFewPairs { got: usize, min: usize },
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    InvalidFractions([f64; 3]),
    #[error("bin count must be at least 1")]
    InvalidBins,
    #[error("percentile bounds must satisfy 0 <= lo < hi <= 100, got {0} and {1}")]
    InvalidPercentiles(f64, f64),
    #[error("duplicate pair_id {0:?}")]
    DuplicatePairId(String),
    #[error("pair {0} has a non-finite attribute value")]
    NonFiniteAttribute(String),
    #[error("strategy grid is empty")]
    EmptyGrid,
    #[error("sample size {k} exceeds the {available} available pairs")]
    SampleTooLarge { k: usize, available: usize },
    #[error("split-wise sampling needs {needed} pairs from native {split} split, which has {available}")]
    InsufficientSplit { split: Split, needed: usize, available: usize },
    #[error("pair {0} has no native split; split-wise sampling needs one on every pair")]
    MissingNativeSplit(String),
    #[error("invalid size range {0:?} (expected start:end:step)")]
    InvalidSizes(String),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

/// Source-side variables a corpus can be stratified or filtered on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StratVariable {
    #[serde(rename = "FKGL")]
    Fkgl,
    #[serde(rename = "ARI")]
    Ari,
    #[serde(rename = "DALE-CHALL")]
    DaleChall,
    #[serde(rename = "CHAR_COUNT")]
    CharCount,
    #[serde(rename = "WORD_COUNT")]
    WordCount,
}

impl StratVariable {
    pub const ALL: [StratVariable; 5] = [
        StratVariable::Fkgl,
        StratVariable::Ari,
        StratVariable::DaleChall,
        StratVariable::CharCount,
        StratVariable::WordCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StratVariable::Fkgl => "FKGL",
            StratVariable::Ari => "ARI",
            StratVariable::DaleChall => "DALE-CHALL",
            StratVariable::CharCount => "CHAR_COUNT",
            StratVariable::WordCount => "WORD_COUNT",
        }
    }

    pub fn value(self, attrs: &AttributeVector) -> f64 {
        match self {
            StratVariable::Fkgl => attrs.fkgl,
            StratVariable::Ari => attrs.ari,
            StratVariable::DaleChall => attrs.dale_chall,
            StratVariable::CharCount => attrs.char_count as f64,
            StratVariable::WordCount => attrs.word_count as f64,
        }
    }
}

impl fmt::Display for StratVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown stratification variable {0:?}")]
pub struct UnknownVariable(pub String);

impl FromStr for StratVariable {
    type Err = UnknownVariable;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Ok(match norm.as_str() {
            "FKGL" => StratVariable::Fkgl,
            "ARI" => StratVariable::Ari,
            "DALE_CHALL" | "DALECHALL" => StratVariable::DaleChall,
            "CHAR_COUNT" | "CHARS" => StratVariable::CharCount,
            "WORD_COUNT" | "WORDS" => StratVariable::WordCount,
            _ => return Err(UnknownVariable(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StratificationStrategy {
    pub variable: StratVariable,
    pub bins: usize,
    pub seed: u64,
}

/// Train/dev/test proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self, PartitionError> {
        let f = Self { train, dev, test };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), PartitionError> {
        let a = self.as_array();
        if a.iter().any(|v| !v.is_finite() || *v < 0.0) || (a.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(PartitionError::InvalidFractions(a));
        }
        Ok(())
    }

    /// In [`Split::ALL`] order.
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }
}

/// Splits `n` items into three counts that follow `fractions` by
/// largest-remainder rounding.
pub fn largest_remainder(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let mut left = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_validation() {
        assert!(SplitFractions::new(0.8, 0.1, 0.1).is_ok());
        assert!(SplitFractions::new(0.8, 0.1, 0.2).is_err());
        assert!(SplitFractions::new(1.2, -0.1, -0.1).is_err());
    }

    #[test]
    fn largest_remainder_exact_total() {
        assert_eq!(largest_remainder(100, &[0.8, 0.1, 0.1]), vec![80, 10, 10]);
        assert_eq!(largest_remainder(7, &[0.8, 0.1, 0.1]), vec![5, 1, 1]);
        assert_eq!(largest_remainder(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(largest_remainder(0, &[0.5, 0.5]), vec![0, 0]);
    }

    #[test]
    fn variable_names() {
        for v in StratVariable::ALL {
            assert_eq!(v.name().parse::<StratVariable>().unwrap(), v);
        }
        assert_eq!("dale-chall".parse::<StratVariable>().unwrap(), StratVariable::DaleChall);
    }
}

//! Unified corpus schema and the operations that turn heterogeneous
//! parallel corpora into uniform complex-simple pairs.

mod adapters;
mod merge;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::textmetrics::{ari, dale_chall, fkgl, tokenize, AttributeKind, CompressionUnit, TextError, TextMetrics};

pub use adapters::{AdapterRegistry, CorpusAdapter, JsonlAdapter, RawRecord, TsvAdapter};
pub use merge::{merge_dual_subsets, MergeStats};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown adapter {0:?}")]
    UnknownAdapter(String),
    #[error("invalid split {0:?} (expected train, dev or test)")]
    InvalidSplit(String),
    #[error("invalid alignment level {0:?} (expected sentence or document)")]
    InvalidAlignment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentLevel {
    Sentence,
    Document,
}

impl FromStr for AlignmentLevel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sentence" => Ok(AlignmentLevel::Sentence),
            "document" | "doc" => Ok(AlignmentLevel::Document),
            _ => Err(CorpusError::InvalidAlignment(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[serde(alias = "validation", alias = "valid")]
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(CorpusError::InvalidSplit(s.to_string())),
        }
    }
}

/// Readability values plus length of one text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector {
    pub fkgl: f64,
    pub ari: f64,
    pub dale_chall: f64,
    pub char_count: usize,
    pub word_count: usize,
}

impl AttributeVector {
    pub fn measure(metrics: &TextMetrics, text: &str) -> Result<Self, TextError> {
        let stats = metrics.analyze(text)?;
        Ok(Self {
            fkgl: fkgl(&stats),
            ari: ari(&stats),
            dale_chall: dale_chall(&stats),
            char_count: stats.chars_total,
            word_count: stats.words,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionRatios {
    pub char_ratio: f64,
    pub word_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplificationRecord {
    pub text: String,
    pub version: u32,
    pub target_metrics: AttributeVector,
    #[serde(flatten)]
    pub compression: CompressionRatios,
    /// Similarity scores by metric name. `-1` marks a metric that could not
    /// be computed.
    #[serde(default)]
    pub similarity: Option<BTreeMap<String, f64>>,
}

impl SimplificationRecord {
    /// Similarity score for `metric`, treating the negative sentinel as absent.
    pub fn similarity_score(&self, metric: &str) -> Option<f64> {
        self.similarity
            .as_ref()?
            .get(metric)
            .copied()
            .filter(|v| *v >= 0.0)
    }
}

/// One complex source with its reference simplifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonizedEntry {
    pub instance_id: String,
    pub source_text: String,
    pub dataset_name: String,
    pub domain: String,
    pub language: String,
    pub annotation_type: String,
    pub alignment_level: AlignmentLevel,
    pub native_split: Option<Split>,
    pub source_metrics: AttributeVector,
    pub simplifications: Vec<SimplificationRecord>,
}

/// One complex-simple instance.
///
/// After flattening `split` carries the corpus' native split; the
/// partitioner overwrites it with the assigned split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatPair {
    pub pair_id: String,
    pub source_text: String,
    pub reference_text: String,
    pub dataset_name: String,
    pub alignment_level: AlignmentLevel,
    pub source_attrs: AttributeVector,
    pub target_attrs: AttributeVector,
    pub split: Option<Split>,
}

impl FlatPair {
    pub fn char_compression(&self) -> f64 {
        self.target_attrs.char_count as f64 / self.source_attrs.char_count as f64
    }

    pub fn word_compression(&self) -> f64 {
        self.target_attrs.word_count as f64 / self.source_attrs.word_count as f64
    }

    /// The value a control token for `kind` would carry for this pair:
    /// reference readability, or reference/source length ratio.
    pub fn control_value(&self, kind: AttributeKind) -> f64 {
        match kind {
            AttributeKind::Fkgl => self.target_attrs.fkgl,
            AttributeKind::Ari => self.target_attrs.ari,
            AttributeKind::DaleChall => self.target_attrs.dale_chall,
            AttributeKind::CharCompression => self.char_compression(),
            AttributeKind::WordCompression => self.word_compression(),
        }
    }

    /// Source-side counterpart of [`FlatPair::control_value`]; compression
    /// of a source against itself is 1.
    pub fn source_value(&self, kind: AttributeKind) -> f64 {
        match kind {
            AttributeKind::Fkgl => self.source_attrs.fkgl,
            AttributeKind::Ari => self.source_attrs.ari,
            AttributeKind::DaleChall => self.source_attrs.dale_chall,
            AttributeKind::CharCompression | AttributeKind::WordCompression => 1.0,
        }
    }
}

/// Metadata stamped on every entry of one harmonized corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub dataset_name: String,
    pub domain: String,
    pub language: String,
    pub annotation_type: String,
    pub alignment_level: AlignmentLevel,
    /// Used when a record does not carry its own split.
    pub native_split: Option<Split>,
}

impl CorpusMeta {
    pub fn new(dataset_name: impl Into<String>) -> Self {
        Self {
            dataset_name: dataset_name.into(),
            domain: "general".into(),
            language: "en".into(),
            annotation_type: "human".into(),
            alignment_level: AlignmentLevel::Sentence,
            native_split: None,
        }
    }

    fn id_prefix(&self) -> String {
        self.dataset_name
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect()
    }
}

/// A record the harmonizer refused, with its 1-based input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct HarmonizeOutcome {
    pub entries: Vec<HarmonizedEntry>,
    pub rejections: Vec<Rejection>,
}

impl HarmonizeOutcome {
    pub fn skipped(&self) -> usize {
        self.rejections.len()
    }
}

/// Reads `path` with the adapter registered as `adapter_id` and converts
/// every acceptable record into a [`HarmonizedEntry`].
pub fn harmonize(
    path: &Path,
    adapter_id: &str,
    registry: &AdapterRegistry,
    meta: &CorpusMeta,
    metrics: &TextMetrics,
) -> Result<HarmonizeOutcome, CorpusError> {
    let adapter = registry
        .get(adapter_id)
        .ok_or_else(|| CorpusError::UnknownAdapter(adapter_id.to_string()))?;
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = std::io::BufReader::new(file);
    harmonize_reader(&mut reader, adapter, meta, metrics).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn harmonize_reader(
    reader: &mut dyn BufRead,
    adapter: &dyn CorpusAdapter,
    meta: &CorpusMeta,
    metrics: &TextMetrics,
) -> std::io::Result<HarmonizeOutcome> {
    let mut outcome = HarmonizeOutcome::default();
    let mut seen_ids = HashSet::new();
    let prefix = meta.id_prefix();
    for (ordinal, record) in adapter.read(reader)?.into_iter().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(rejection) => {
                log::warn!("rejected {rejection}");
                outcome.rejections.push(rejection);
                continue;
            }
        };
        let line = record.line;
        match build_entry(record, ordinal, &prefix, meta, metrics) {
            Ok(entry) if !seen_ids.insert(entry.instance_id.clone()) => {
                outcome.rejections.push(Rejection {
                    line,
                    reason: format!("duplicate instance_id {:?}", entry.instance_id),
                });
            }
            Ok(entry) => outcome.entries.push(entry),
            Err(reason) => {
                let rejection = Rejection { line, reason };
                log::warn!("rejected {rejection}");
                outcome.rejections.push(rejection);
            }
        }
    }
    Ok(outcome)
}

fn build_entry(
    record: RawRecord,
    ordinal: usize,
    prefix: &str,
    meta: &CorpusMeta,
    metrics: &TextMetrics,
) -> Result<HarmonizedEntry, String> {
    let source = record.source.trim();
    if source.is_empty() {
        return Err("empty source text".into());
    }
    if record.simplifications.is_empty() {
        return Err("no simplifications".into());
    }
    if let Some(k) = record.simplifications.iter().position(|s| s.trim().is_empty()) {
        return Err(format!("empty simplification in column {}", k + 1));
    }
    let source_metrics = AttributeVector::measure(metrics, source).map_err(|e| format!("source: {e}"))?;
    let simplifications = record
        .simplifications
        .iter()
        .enumerate()
        .map(|(k, text)| {
            let text = text.trim();
            let target_metrics =
                AttributeVector::measure(metrics, text).map_err(|e| format!("simplification {}: {e}", k + 1))?;
            let compression = CompressionRatios {
                char_ratio: metrics
                    .compression(source, text, CompressionUnit::Char)
                    .map_err(|e| e.to_string())?,
                word_ratio: metrics
                    .compression(source, text, CompressionUnit::Word)
                    .map_err(|e| e.to_string())?,
            };
            Ok(SimplificationRecord {
                text: text.to_string(),
                version: k as u32 + 1,
                target_metrics,
                compression,
                similarity: record.similarity.clone(),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let instance_id = record
        .id
        .filter(|id| !id.trim().is_empty())
        .unwrap_or_else(|| format!("{prefix}_{ordinal:06}"));
    Ok(HarmonizedEntry {
        instance_id,
        source_text: source.to_string(),
        dataset_name: meta.dataset_name.clone(),
        domain: meta.domain.clone(),
        language: meta.language.clone(),
        annotation_type: meta.annotation_type.clone(),
        alignment_level: meta.alignment_level,
        native_split: record.native_split.or(meta.native_split),
        source_metrics,
        simplifications,
    })
}

/// One [`FlatPair`] per simplification, in entry then version order.
pub fn flatten<'a, I>(entries: I) -> Vec<FlatPair>
where
    I: IntoIterator<Item = &'a HarmonizedEntry>,
{
    entries
        .into_iter()
        .flat_map(|entry| {
            entry.simplifications.iter().map(move |simp| FlatPair {
                pair_id: format!("{}_v{}", entry.instance_id, simp.version),
                source_text: entry.source_text.clone(),
                reference_text: simp.text.clone(),
                dataset_name: entry.dataset_name.clone(),
                alignment_level: entry.alignment_level,
                source_attrs: entry.source_metrics,
                target_attrs: simp.target_metrics,
                split: entry.native_split,
            })
        })
        .collect()
}

/// Word count of `text` under the corpus tokenizer.
pub fn word_count(text: &str) -> usize {
    tokenize::words(text).len()
}

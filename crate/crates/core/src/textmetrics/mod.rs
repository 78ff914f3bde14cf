//! Deterministic English text analysis: tokenization, sentence
//! segmentation, syllable estimates, FKGL / ARI / Dale-Chall and
//! compression ratios.

mod familiar;
mod syllables;
pub mod tokenize;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use familiar::FamiliarWordList;
pub use syllables::count_syllables;

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("empty input")]
    EmptyInput,
    #[error("text contains no words: {0:?}")]
    NoWords(String),
    #[error("cannot read familiar-word list {path}: {source}")]
    WordList {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("familiar-word list is empty")]
    EmptyWordList,
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
}

/// Raw counts behind every readability formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextStats {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
    /// Alphanumeric code points.
    pub letters_digits: usize,
    /// Every non-whitespace code point, punctuation included. This is the
    /// character base of ARI.
    pub non_space_chars: usize,
    /// Code points of the trimmed text, whitespace included.
    pub chars_total: usize,
    /// Words absent from the familiar-word list.
    pub difficult_words: usize,
}

/// The five numeric control attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttributeKind {
    #[serde(rename = "FKGL")]
    Fkgl,
    #[serde(rename = "ARI")]
    Ari,
    #[serde(rename = "DALE-CHALL")]
    DaleChall,
    #[serde(rename = "CHAR_COMPRESSION")]
    CharCompression,
    #[serde(rename = "WORD_COMPRESSION")]
    WordCompression,
}

impl AttributeKind {
    pub const ALL: [AttributeKind; 5] = [
        AttributeKind::Fkgl,
        AttributeKind::Ari,
        AttributeKind::DaleChall,
        AttributeKind::CharCompression,
        AttributeKind::WordCompression,
    ];

    /// Token name as it appears inside `<NAME=VALUE>`.
    pub fn name(self) -> &'static str {
        match self {
            AttributeKind::Fkgl => "FKGL",
            AttributeKind::Ari => "ARI",
            AttributeKind::DaleChall => "DALE-CHALL",
            AttributeKind::CharCompression => "CHAR_COMPRESSION",
            AttributeKind::WordCompression => "WORD_COMPRESSION",
        }
    }

    /// Exact inverse of [`AttributeKind::name`]; unlike `FromStr` it accepts
    /// no aliases or case variants.
    pub fn from_name(name: &str) -> Result<Self, TextError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| TextError::UnknownAttribute(name.to_string()))
    }

    pub fn is_readability(self) -> bool {
        matches!(self, AttributeKind::Fkgl | AttributeKind::Ari | AttributeKind::DaleChall)
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttributeKind {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        Ok(match norm.as_str() {
            "FKGL" => AttributeKind::Fkgl,
            "ARI" => AttributeKind::Ari,
            "DALE-CHALL" | "DALECHALL" => AttributeKind::DaleChall,
            "CHAR-COMPRESSION" | "CHAR" => AttributeKind::CharCompression,
            "WORD-COMPRESSION" | "WORD" => AttributeKind::WordCompression,
            _ => return Err(TextError::UnknownAttribute(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressionUnit {
    Char,
    Word,
}

/// Analyzer bound to a familiar-word list.
#[derive(Debug, Clone)]
pub struct TextMetrics {
    familiar: Arc<FamiliarWordList>,
}

impl Default for TextMetrics {
    fn default() -> Self {
        static SHARED: OnceLock<Arc<FamiliarWordList>> = OnceLock::new();
        let familiar = SHARED.get_or_init(|| Arc::new(FamiliarWordList::bundled().clone()));
        Self {
            familiar: Arc::clone(familiar),
        }
    }
}

impl TextMetrics {
    pub fn new(familiar: FamiliarWordList) -> Self {
        Self {
            familiar: Arc::new(familiar),
        }
    }

    pub fn familiar_words(&self) -> &FamiliarWordList {
        &self.familiar
    }

    pub fn analyze(&self, text: &str) -> Result<TextStats, TextError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(TextError::EmptyInput);
        }
        let words = tokenize::words(text);
        if words.is_empty() {
            return Err(TextError::NoWords(text.to_string()));
        }
        let sentences = tokenize::sentences(text).len().max(1);
        let syllables = words.iter().map(|w| count_syllables(w)).sum();
        let difficult_words = words.iter().filter(|w| !self.familiar.is_familiar(w)).count();
        Ok(TextStats {
            sentences,
            words: words.len(),
            syllables,
            letters_digits: text.chars().filter(|c| c.is_alphanumeric()).count(),
            non_space_chars: text.chars().filter(|c| !c.is_whitespace()).count(),
            chars_total: text.chars().count(),
            difficult_words,
        })
    }

    pub fn compression(&self, source: &str, output: &str, unit: CompressionUnit) -> Result<f64, TextError> {
        let (src, out) = match unit {
            CompressionUnit::Char => (char_len(source), char_len(output)),
            CompressionUnit::Word => (tokenize::words(source).len(), tokenize::words(output).len()),
        };
        if src == 0 || out == 0 {
            return Err(TextError::EmptyInput);
        }
        Ok(out as f64 / src as f64)
    }

    /// Value of `kind` realized by `output`. Readability attributes look at
    /// `output` alone; compression attributes compare it with `source`.
    pub fn attribute_value(&self, kind: AttributeKind, source: &str, output: &str) -> Result<f64, TextError> {
        match kind {
            AttributeKind::Fkgl => Ok(fkgl(&self.analyze(output)?)),
            AttributeKind::Ari => Ok(ari(&self.analyze(output)?)),
            AttributeKind::DaleChall => Ok(dale_chall(&self.analyze(output)?)),
            AttributeKind::CharCompression => self.compression(source, output, CompressionUnit::Char),
            AttributeKind::WordCompression => self.compression(source, output, CompressionUnit::Word),
        }
    }
}

fn char_len(text: &str) -> usize {
    text.trim().chars().count()
}

/// Shorthand for [`TextMetrics::analyze`] with the bundled word list.
pub fn analyze(text: &str) -> Result<TextStats, TextError> {
    TextMetrics::default().analyze(text)
}

pub fn compression(source: &str, output: &str, unit: CompressionUnit) -> Result<f64, TextError> {
    TextMetrics::default().compression(source, output, unit)
}

pub fn attribute_value(kind: AttributeKind, source: &str, output: &str) -> Result<f64, TextError> {
    TextMetrics::default().attribute_value(kind, source, output)
}

/// Flesch-Kincaid Grade Level.
pub fn fkgl(stats: &TextStats) -> f64 {
    let w = stats.words as f64;
    0.39 * (w / stats.sentences as f64) + 11.8 * (stats.syllables as f64 / w) - 15.59
}

/// Automated Readability Index.
pub fn ari(stats: &TextStats) -> f64 {
    let w = stats.words as f64;
    4.71 * (stats.non_space_chars as f64 / w) + 0.5 * (w / stats.sentences as f64) - 21.43
}

/// New Dale-Chall score, including the 3.6365 adjustment above 5%
/// difficult words.
pub fn dale_chall(stats: &TextStats) -> f64 {
    let w = stats.words as f64;
    let pct_difficult = 100.0 * stats.difficult_words as f64 / w;
    let raw = 0.1579 * pct_difficult + 0.0496 * (w / stats.sentences as f64);
    if pct_difficult > 5.0 {
        raw + 3.6365
    } else {
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(sentences: usize, words: usize, syllables: usize, chars: usize, difficult: usize) -> TextStats {
        TextStats {
            sentences,
            words,
            syllables,
            letters_digits: chars,
            non_space_chars: chars,
            chars_total: chars + words - 1,
            difficult_words: difficult,
        }
    }

    #[test]
    fn cat_sat_counts() {
        let s = analyze("The cat sat on the mat.").unwrap();
        assert_eq!((s.sentences, s.words, s.syllables, s.letters_digits), (1, 6, 6, 17));
        assert_eq!(s.non_space_chars, 18);
        assert_eq!(s.difficult_words, 0);
    }

    #[test]
    fn formula_arithmetic() {
        assert!((fkgl(&stats(1, 6, 6, 17, 0)) - -1.45).abs() < 1e-12);
        assert!((ari(&stats(1, 6, 6, 17, 0)) - -5.085).abs() < 1e-12);
        assert!((dale_chall(&stats(1, 10, 10, 40, 0)) - 0.496).abs() < 1e-12);
        assert!((dale_chall(&stats(1, 10, 10, 40, 1)) - 5.7115).abs() < 1e-12);
    }

    #[test]
    fn dale_chall_threshold_is_strict() {
        // exactly 5% difficult: no adjustment
        let s = stats(1, 20, 20, 80, 1);
        assert!((dale_chall(&s) - (0.1579 * 5.0 + 0.0496 * 20.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_and_wordless_input() {
        assert!(matches!(analyze("   "), Err(TextError::EmptyInput)));
        assert!(matches!(analyze(" , . "), Err(TextError::NoWords(_))));
    }

    #[test]
    fn duplication_keeps_ratio_scores() {
        let one = "The old man walked slowly to the market.";
        let three = [one; 3].join(" ");
        let (a, b) = (analyze(one).unwrap(), analyze(&three).unwrap());
        assert_eq!(b.sentences, 3);
        assert!((fkgl(&a) - fkgl(&b)).abs() < 1e-9);
        assert!((ari(&a) - ari(&b)).abs() < 1e-9);
    }

    #[test]
    fn compression_ratios() {
        let s = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen";
        let o = "one two three four five six seven";
        assert_eq!(compression(s, s, CompressionUnit::Char).unwrap(), 1.0);
        assert_eq!(compression(s, o, CompressionUnit::Word).unwrap(), 0.5);
        assert!(compression("", o, CompressionUnit::Word).is_err());
    }

    #[test]
    fn attribute_dispatch() {
        let v = attribute_value(AttributeKind::Fkgl, "", "The cat sat on the mat.").unwrap();
        assert!((v - -1.45).abs() < 1e-12);
        let s = "Some text here.";
        assert_eq!(attribute_value(AttributeKind::CharCompression, s, s).unwrap(), 1.0);
        let familiar10 = "The boy and the girl sat in the red car.";
        let v = attribute_value(AttributeKind::DaleChall, "", familiar10).unwrap();
        assert!((v - 0.496).abs() < 1e-12);
    }

    #[test]
    fn attribute_names_round_trip() {
        for kind in AttributeKind::ALL {
            assert_eq!(kind.name().parse::<AttributeKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
        assert!("LENS".parse::<AttributeKind>().is_err());
    }
}

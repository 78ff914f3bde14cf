use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use super::tokenize::normalize_word;
use super::TextError;

const BUNDLED: &str = include_str!("../../data/dale_chall_familiar.txt");

/// Case-folded set of words familiar to fourth-grade readers, used to
/// classify Dale-Chall "difficult" words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamiliarWordList {
    words: HashSet<String>,
}

impl FamiliarWordList {
    /// Parses one word per line. Entries are lowercased and stripped of
    /// surrounding punctuation the same way corpus words are, so `mr.` in the
    /// list matches the token `Mr.`.
    pub fn parse(contents: &str) -> Result<Self, TextError> {
        let words: HashSet<String> = contents
            .lines()
            .filter_map(|l| normalize_word(l.trim()))
            .map(str::to_lowercase)
            .collect();
        if words.is_empty() {
            return Err(TextError::EmptyWordList);
        }
        Ok(Self { words })
    }

    pub fn from_path(path: &Path) -> Result<Self, TextError> {
        let contents = std::fs::read_to_string(path).map_err(|source| TextError::WordList {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&contents)
    }

    /// The list shipped with the crate (~2,900 entries).
    pub fn bundled() -> &'static FamiliarWordList {
        static LIST: OnceLock<FamiliarWordList> = OnceLock::new();
        LIST.get_or_init(|| Self::parse(BUNDLED).expect("bundled word list is non-empty"))
    }

    /// Exact case-folded lookup, no stemming.
    pub fn is_familiar(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Deserialize;

use super::{Rejection, Split};

/// A dataset-specific record, before validation and metric computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawRecord {
    /// 1-based input line.
    pub line: usize,
    pub id: Option<String>,
    pub source: String,
    pub simplifications: Vec<String>,
    pub native_split: Option<Split>,
    pub similarity: Option<BTreeMap<String, f64>>,
}

/// Input-format plugin for [`super::harmonize`].
pub trait CorpusAdapter: Send + Sync {
    fn id(&self) -> &str;

    /// Reads all records. Records that cannot be decoded come back as
    /// rejections so the harmonizer can report them with line numbers.
    fn read(&self, input: &mut dyn BufRead) -> std::io::Result<Vec<Result<RawRecord, Rejection>>>;
}

/// Tab-separated rows: source in the first column, one simplification per
/// following column.
#[derive(Debug, Default, Clone, Copy)]
pub struct TsvAdapter;

impl CorpusAdapter for TsvAdapter {
    fn id(&self) -> &str {
        "tsv"
    }

    fn read(&self, input: &mut dyn BufRead) -> std::io::Result<Vec<Result<RawRecord, Rejection>>> {
        let mut out = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let source = cols.next().unwrap_or_default().to_string();
            out.push(Ok(RawRecord {
                line: idx + 1,
                source,
                simplifications: cols.map(str::to_string).collect(),
                ..RawRecord::default()
            }));
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
struct MinimalRecord {
    #[serde(default, alias = "instance_id")]
    id: Option<String>,
    #[serde(alias = "source_text", alias = "complex")]
    source: String,
    #[serde(default)]
    simplifications: Vec<String>,
    #[serde(default, alias = "simple", alias = "reference")]
    simplification: Option<String>,
    #[serde(default, alias = "split")]
    native_split: Option<String>,
    #[serde(default)]
    similarity: Option<BTreeMap<String, f64>>,
}

/// One JSON object per line:
/// `{"id"?, "source", "simplifications": [..] | "simplification", "native_split"?}`.
#[derive(Debug, Default, Clone, Copy)]
pub struct JsonlAdapter;

impl CorpusAdapter for JsonlAdapter {
    fn id(&self) -> &str {
        "jsonl"
    }

    fn read(&self, input: &mut dyn BufRead) -> std::io::Result<Vec<Result<RawRecord, Rejection>>> {
        let mut out = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let reject = |reason: String| Err(Rejection { line: lineno, reason });
            let rec: MinimalRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    out.push(reject(format!("malformed record: {e}")));
                    continue;
                }
            };
            let native_split = match rec.native_split.as_deref().map(str::parse::<Split>).transpose() {
                Ok(s) => s,
                Err(e) => {
                    out.push(reject(e.to_string()));
                    continue;
                }
            };
            let mut simplifications = rec.simplifications;
            simplifications.extend(rec.simplification);
            out.push(Ok(RawRecord {
                line: lineno,
                id: rec.id,
                source: rec.source,
                simplifications,
                native_split,
                similarity: rec.similarity,
            }));
        }
        Ok(out)
    }
}

/// Adapters addressable by id.
pub struct AdapterRegistry {
    adapters: Vec<Box<dyn CorpusAdapter>>,
}

impl AdapterRegistry {
    pub fn empty() -> Self {
        Self { adapters: Vec::new() }
    }

    /// Registry with the generic `tsv` and `jsonl` adapters.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(TsvAdapter));
        r.register(Box::new(JsonlAdapter));
        r
    }

    /// Adds an adapter; a later registration with the same id wins.
    pub fn register(&mut self, adapter: Box<dyn CorpusAdapter>) {
        self.adapters.retain(|a| a.id() != adapter.id());
        self.adapters.push(adapter);
    }

    pub fn get(&self, id: &str) -> Option<&dyn CorpusAdapter> {
        self.adapters.iter().find(|a| a.id() == id).map(|a| a.as_ref())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.adapters.iter().map(|a| a.id())
    }
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(adapter: &dyn CorpusAdapter, text: &str) -> Vec<Result<RawRecord, Rejection>> {
        adapter.read(&mut std::io::Cursor::new(text.as_bytes())).unwrap()
    }

    #[test]
    fn tsv_columns_and_blank_lines() {
        let recs = read(&TsvAdapter, "a\tb\tc\r\n\n d \te\n");
        assert_eq!(recs.len(), 2);
        let first = recs[0].as_ref().unwrap();
        assert_eq!(first.simplifications, vec!["b", "c"]);
        assert_eq!(recs[1].as_ref().unwrap().line, 3);
    }

    #[test]
    fn jsonl_forms() {
        let text = concat!(
            r#"{"id": "x1", "source": "S.", "simplifications": ["A.", "B."], "split": "validation"}"#,
            "\n",
            r#"{"source": "T.", "simplification": "C."}"#,
            "\n",
            "not json\n",
            r#"{"source": "U.", "simplification": "D.", "split": "holdout"}"#,
            "\n"
        );
        let recs = read(&JsonlAdapter, text);
        let a = recs[0].as_ref().unwrap();
        assert_eq!(a.id.as_deref(), Some("x1"));
        assert_eq!(a.simplifications.len(), 2);
        assert_eq!(a.native_split, Some(Split::Dev));
        assert_eq!(recs[1].as_ref().unwrap().simplifications, vec!["C."]);
        assert_eq!(recs[2].as_ref().unwrap_err().line, 3);
        assert!(recs[3].as_ref().unwrap_err().reason.contains("holdout"));
    }

    #[test]
    fn registry_lookup_and_override() {
        let mut reg = AdapterRegistry::with_defaults();
        assert!(reg.get("tsv").is_some());
        assert!(reg.get("newsela").is_none());
        reg.register(Box::new(TsvAdapter));
        assert_eq!(reg.ids().count(), 2);
    }
}

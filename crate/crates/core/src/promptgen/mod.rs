//! Control-token prompts: one system, user and assistant message per pair
//! and attribute.

mod templates;
mod token;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::FlatPair;
use crate::jsonl::{self, JsonlError};
use crate::textmetrics::AttributeKind;

pub use templates::TemplateSet;
pub use token::{parse_token, render_token, render_token_with, ControlToken, TokenRounding};

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("{0} value is not finite")]
    NonFinite(AttributeKind),
    #[error("unknown token rounding {0:?} (expected one_decimal or integer)")]
    UnknownRounding(String),
    #[error("reading template {path}: {source}")]
    Template {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template {template} lacks the {placeholder} placeholder")]
    MissingPlaceholder {
        template: String,
        placeholder: &'static str,
    },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// One line of a prompt file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub pair_id: String,
    pub attribute: AttributeKind,
    /// System, user, assistant, in that order. The assistant message holds
    /// only the target token.
    pub messages: Vec<ChatMessage>,
    pub target_token: ControlToken,
    /// Rounded value carried by the target token.
    pub target_value: f64,
    /// Rounded source-side value; 1 for compression attributes.
    pub source_value: f64,
    pub reference_text: String,
    pub system_variant_id: usize,
    pub source_text: String,
    pub dataset_name: String,
}

impl PromptRecord {
    pub fn message(&self, role: Role) -> Option<&ChatMessage> {
        self.messages.iter().find(|m| m.role == role)
    }

    /// Messages sent at inference time, without the assistant target.
    pub fn request_messages(&self) -> Vec<ChatMessage> {
        self.messages.iter().filter(|m| m.role != Role::Assistant).cloned().collect()
    }

    pub fn user_content(&self) -> &str {
        self.message(Role::User).map_or("", |m| m.content.as_str())
    }
}

/// Variant id in `1..=variants`, fixed by `(seed, pair_id)`.
pub fn system_variant(seed: u64, pair_id: &str, variants: usize) -> usize {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(pair_id.as_bytes());
    let digest = h.finalize();
    let key = u64::from_le_bytes(digest[..8].try_into().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.random_range(0..variants) + 1
}

/// Renders prompts from a template set.
#[derive(Debug, Clone, Copy)]
pub struct PromptBuilder<'a> {
    pub templates: &'a TemplateSet,
    pub rounding: TokenRounding,
}

impl Default for PromptBuilder<'static> {
    fn default() -> Self {
        Self {
            templates: TemplateSet::bundled(),
            rounding: TokenRounding::OneDecimal,
        }
    }
}

impl<'a> PromptBuilder<'a> {
    pub fn new(templates: &'a TemplateSet, rounding: TokenRounding) -> Self {
        Self { templates, rounding }
    }

    pub fn build(&self, pair: &FlatPair, attribute: AttributeKind, seed: u64) -> Result<PromptRecord, PromptError> {
        let target = render_token_with(attribute, pair.control_value(attribute), self.rounding)?;
        let source = render_token_with(attribute, pair.source_value(attribute), self.rounding)?;
        let target_text = target.value_text();
        let explanation = templates::fill(
            self.templates.explanation(attribute),
            &[("TARGET_VALUE", &target_text)],
        );
        let source_text = source.value_text();
        let user = templates::fill(
            self.templates.instruction(attribute),
            &[
                ("SOURCE_VALUE", &source_text),
                ("TEXT", &pair.source_text),
                ("EXPLANATION", &explanation),
            ],
        );
        let variant = system_variant(seed, &pair.pair_id, self.templates.system_variants());
        Ok(PromptRecord {
            pair_id: pair.pair_id.clone(),
            attribute,
            messages: vec![
                ChatMessage::new(Role::System, self.templates.system(variant)),
                ChatMessage::new(Role::User, user),
                ChatMessage::new(Role::Assistant, target.to_string()),
            ],
            target_token: target,
            target_value: target.value,
            source_value: source.value,
            reference_text: pair.reference_text.clone(),
            system_variant_id: variant,
            source_text: pair.source_text.clone(),
            dataset_name: pair.dataset_name.clone(),
        })
    }

    /// Prompts for all pairs, in input order.
    pub fn build_all(&self, pairs: &[FlatPair], attribute: AttributeKind, seed: u64) -> Result<Vec<PromptRecord>, PromptError> {
        pairs.par_iter().map(|p| self.build(p, attribute, seed)).collect()
    }
}

/// [`PromptBuilder::build`] with the bundled templates and one-decimal
/// tokens.
pub fn build_prompt(pair: &FlatPair, attribute: AttributeKind, seed: u64) -> Result<PromptRecord, PromptError> {
    PromptBuilder::default().build(pair, attribute, seed)
}

/// Writes one prompt per pair to a JSONL file and returns the count.
pub fn emit_prompt_file(
    pairs: &[FlatPair],
    attribute: AttributeKind,
    seed: u64,
    out: &Path,
    builder: &PromptBuilder<'_>,
) -> Result<usize, PromptError> {
    let records = builder.build_all(pairs, attribute, seed)?;
    jsonl::write_jsonl_file(out, &records)?;
    Ok(records.len())
}

pub fn read_prompt_file(path: &Path) -> Result<Vec<PromptRecord>, PromptError> {
    Ok(jsonl::read_jsonl(path)?)
}

/// Writes already rendered prompts.
pub fn write_prompt_file(records: &[PromptRecord], out: &Path) -> Result<(), PromptError> {
    Ok(jsonl::write_jsonl_file(out, records)?)
}

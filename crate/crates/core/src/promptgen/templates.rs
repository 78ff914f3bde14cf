use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use super::PromptError;
use crate::textmetrics::AttributeKind;

macro_rules! asset {
    ($p:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/templates/", $p))
    };
}

const BUNDLED_INSTRUCTIONS: [(AttributeKind, &str); 5] = [
    (AttributeKind::Fkgl, asset!("instruction/FKGL.txt")),
    (AttributeKind::Ari, asset!("instruction/ARI.txt")),
    (AttributeKind::DaleChall, asset!("instruction/DALE-CHALL.txt")),
    (AttributeKind::CharCompression, asset!("instruction/CHAR_COMPRESSION.txt")),
    (AttributeKind::WordCompression, asset!("instruction/WORD_COMPRESSION.txt")),
];

const BUNDLED_EXPLANATIONS: [(AttributeKind, &str); 5] = [
    (AttributeKind::Fkgl, asset!("explanation/FKGL.txt")),
    (AttributeKind::Ari, asset!("explanation/ARI.txt")),
    (AttributeKind::DaleChall, asset!("explanation/DALE-CHALL.txt")),
    (AttributeKind::CharCompression, asset!("explanation/CHAR_COMPRESSION.txt")),
    (AttributeKind::WordCompression, asset!("explanation/WORD_COMPRESSION.txt")),
];

const BUNDLED_SYSTEM: [&str; 6] = [
    asset!("system/1.txt"),
    asset!("system/2.txt"),
    asset!("system/3.txt"),
    asset!("system/4.txt"),
    asset!("system/5.txt"),
    asset!("system/6.txt"),
];

/// Asset files end with a newline for editor friendliness; the prompt text
/// itself does not.
fn strip_one_newline(s: &str) -> &str {
    s.strip_suffix("\r\n").or_else(|| s.strip_suffix('\n')).unwrap_or(s)
}

/// Instruction, explanation and system-prompt texts.
///
/// Instruction templates use `{TEXT}`, `{EXPLANATION}` and, for readability
/// attributes, `{SOURCE_VALUE}`. Explanations use `{TARGET_VALUE}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    instructions: BTreeMap<AttributeKind, String>,
    explanations: BTreeMap<AttributeKind, String>,
    system: Vec<String>,
}

impl TemplateSet {
    /// Templates compiled into the crate.
    pub fn bundled() -> &'static TemplateSet {
        static SET: OnceLock<TemplateSet> = OnceLock::new();
        SET.get_or_init(|| {
            let strip = |(k, s): &(AttributeKind, &str)| (*k, strip_one_newline(s).to_string());
            TemplateSet {
                instructions: BUNDLED_INSTRUCTIONS.iter().map(strip).collect(),
                explanations: BUNDLED_EXPLANATIONS.iter().map(strip).collect(),
                system: BUNDLED_SYSTEM.iter().map(|s| strip_one_newline(s).to_string()).collect(),
            }
        })
    }

    /// Loads `instruction/<NAME>.txt`, `explanation/<NAME>.txt` and
    /// `system/<n>.txt` (n = 1, 2, ...) from `dir`. Attribute files that are
    /// missing fall back to the bundled text; system prompts are taken from
    /// the directory only when at least `system/1.txt` exists.
    pub fn from_dir(dir: &Path) -> Result<TemplateSet, PromptError> {
        let bundled = Self::bundled();
        let read = |p: &Path| -> Result<Option<String>, PromptError> {
            match fs::read_to_string(p) {
                Ok(s) => Ok(Some(strip_one_newline(&s).to_string())),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(PromptError::Template {
                    path: p.display().to_string(),
                    source,
                }),
            }
        };
        let mut set = bundled.clone();
        for kind in AttributeKind::ALL {
            if let Some(s) = read(&dir.join("instruction").join(format!("{}.txt", kind.name())))? {
                set.instructions.insert(kind, s);
            }
            if let Some(s) = read(&dir.join("explanation").join(format!("{}.txt", kind.name())))? {
                set.explanations.insert(kind, s);
            }
        }
        let mut system = Vec::new();
        while let Some(s) = read(&dir.join("system").join(format!("{}.txt", system.len() + 1)))? {
            system.push(s);
        }
        if !system.is_empty() {
            set.system = system;
        }
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), PromptError> {
        for (kind, t) in &self.instructions {
            let mut required = vec!["{TEXT}", "{EXPLANATION}"];
            if kind.is_readability() {
                required.push("{SOURCE_VALUE}");
            }
            for r in required {
                if !t.contains(r) {
                    return Err(PromptError::MissingPlaceholder {
                        template: format!("instruction/{}", kind.name()),
                        placeholder: r,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn instruction(&self, kind: AttributeKind) -> &str {
        &self.instructions[&kind]
    }

    pub fn explanation(&self, kind: AttributeKind) -> &str {
        &self.explanations[&kind]
    }

    /// 1-based variant id.
    pub fn system(&self, variant: usize) -> &str {
        &self.system[variant - 1]
    }

    pub fn system_variants(&self) -> usize {
        self.system.len()
    }
}

/// Replaces `{NAME}` placeholders in a single left-to-right pass, so text
/// substituted in is never scanned again.
pub(crate) fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = values.iter().find(|(name, _)| {
            tail.len() > name.len() + 1
                && tail[1..].starts_with(name)
                && tail.as_bytes()[name.len() + 1] == b'}'
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

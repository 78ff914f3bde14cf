//! Chat prompts with control tokens, one file per attribute.

use ctrlsimp::corpus::{AlignmentLevel, AttributeVector, FlatPair, Split};
use ctrlsimp::promptgen::{build_prompt, parse_token, render_token, PromptBuilder, Role, TemplateSet, TokenRounding};
use ctrlsimp::textmetrics::AttributeKind;

fn main() {
    let pair = FlatPair {
        pair_id: "wikilarge_000001_v0".into(),
        source_text: "No cure for the common cold exists , but the symptoms can be treated .".into(),
        reference_text: "There is no cure for colds , but the symptoms can be treated .".into(),
        dataset_name: "WikiLarge".into(),
        alignment_level: AlignmentLevel::Sentence,
        source_attrs: AttributeVector { fkgl: 4.8, ari: 6.1, dale_chall: 7.9, char_count: 70, word_count: 15 },
        target_attrs: AttributeVector { fkgl: 4.0, ari: 4.4, dale_chall: 7.2, char_count: 62, word_count: 14 },
        split: Some(Split::Test),
    };

    let r = build_prompt(&pair, AttributeKind::Fkgl, 37).unwrap();
    for m in &r.messages {
        println!("--- {:?}\n{}", m.role, m.content);
    }

    println!("\ntargets per attribute:");
    for kind in AttributeKind::ALL {
        let r = build_prompt(&pair, kind, 37).unwrap();
        println!("  {:<18} {}", kind.name(), r.message(Role::Assistant).unwrap().content);
    }

    let whole = PromptBuilder::new(TemplateSet::bundled(), TokenRounding::Integer);
    let r = whole.build(&pair, AttributeKind::DaleChall, 37).unwrap();
    println!("\ninteger rounding: {}", r.target_token);

    let token = render_token(AttributeKind::Ari, 11.25).unwrap();
    let reply = format!("{token} Simplified text.");
    let (parsed, rest) = parse_token(&reply);
    println!("{token} parses back to {:?}, remainder {rest:?}", parsed.map(|t| t.value));
}

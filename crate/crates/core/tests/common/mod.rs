#![allow(dead_code)]

use ctrlsimp::corpus::{AlignmentLevel, AttributeVector, FlatPair, Split};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn attrs(fkgl: f64, ari: f64, dale_chall: f64, chars: usize, words: usize) -> AttributeVector {
    AttributeVector {
        fkgl,
        ari,
        dale_chall,
        char_count: chars,
        word_count: words,
    }
}

pub fn pair(id: &str, source: AttributeVector, target: AttributeVector, split: Option<Split>) -> FlatPair {
    FlatPair {
        pair_id: id.to_string(),
        source_text: format!("source of {id}"),
        reference_text: format!("reference of {id}"),
        dataset_name: "synthetic".into(),
        alignment_level: AlignmentLevel::Sentence,
        source_attrs: source,
        target_attrs: target,
        split,
    }
}

/// Pairs whose reference attributes follow the source FKGL with noise, so
/// stratifying on source FKGL should balance the control values.
pub fn synthetic(n: usize, seed: u64) -> Vec<FlatPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let f: f64 = rng.random_range(2.0..18.0);
            let words = rng.random_range(8..40usize);
            let chars = words * rng.random_range(4..7usize);
            let src = attrs(f, f + rng.random_range(-1.0..1.0), 6.0 + f / 4.0, chars, words);
            let cr = 0.5 + f / 40.0;
            let tw = ((words as f64 * cr).round() as usize).max(1);
            let tc = ((chars as f64 * cr).round() as usize).max(tw);
            let tf = f * 0.7 + rng.random_range(-1.0..1.0);
            let tgt = attrs(tf, tf + rng.random_range(-1.0..1.0), 5.0 + tf / 4.0, tc, tw);
            pair(&format!("p{i:05}"), src, tgt, None)
        })
        .collect()
}

//! How close stratified subsamples of growing size stay to the full set,
//! drawing from the whole pool versus from each native split.

use ctrlsimp::corpus::{AlignmentLevel, AttributeVector, FlatPair, Split};
use ctrlsimp::partition::{sampling_experiment, SamplingMode, SamplingOptions, StratVariable};
use ctrlsimp::seeds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn attrs(fkgl: f64, chars: usize, words: usize) -> AttributeVector {
    AttributeVector {
        fkgl,
        ari: fkgl + 1.0,
        dale_chall: 5.0 + fkgl / 3.0,
        char_count: chars,
        word_count: words,
    }
}

/// A corpus whose dev split holds the easiest tenth and whose test split
/// holds the hardest tenth.
fn corpus(n: usize) -> Vec<FlatPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pairs: Vec<FlatPair> = (0..n)
        .map(|i| {
            let f = rng.random_range(2.0..16.0);
            let words = rng.random_range(10..40);
            let tf = f * 0.75 + rng.random_range(-1.0..1.0);
            FlatPair {
                pair_id: format!("s{i:05}"),
                source_text: String::new(),
                reference_text: String::new(),
                dataset_name: "synthetic".into(),
                alignment_level: AlignmentLevel::Sentence,
                source_attrs: attrs(f, words * 5, words),
                target_attrs: attrs(tf, words * 4, words - words / 5),
                split: None,
            }
        })
        .collect();
    pairs.sort_by(|a, b| a.source_attrs.fkgl.total_cmp(&b.source_attrs.fkgl));
    for (i, p) in pairs.iter_mut().enumerate() {
        p.split = Some(match i * 10 / n {
            0 => Split::Dev,
            9 => Split::Test,
            _ => Split::Train,
        });
    }
    pairs
}

fn main() {
    let pairs = corpus(5_000);
    let sizes: Vec<usize> = (100..=1_500).step_by(200).collect();
    let curves = sampling_experiment(
        &pairs,
        StratVariable::Fkgl,
        &sizes,
        &seeds::DOWNSAMPLING[..5],
        &SamplingMode::ALL,
        &SamplingOptions::default(),
    )
    .unwrap();

    print!("{:>6}", "size");
    for c in &curves {
        print!("  {:>12} KS  {:>8} JSD", c.mode.to_string(), "");
    }
    println!();
    for (i, size) in sizes.iter().enumerate() {
        print!("{size:>6}");
        for c in &curves {
            let p = &c.points[i];
            print!("  {:>15.4}  {:>12.4}", p.mean_ks, p.mean_jsd);
        }
        println!();
    }
}

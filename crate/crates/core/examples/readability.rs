//! Readability scores and compression ratios for a few sentences.
//!
//! cargo run --example readability -- "Your own sentence here."

use ctrlsimp::textmetrics::{self, CompressionUnit, TextMetrics};

fn main() {
    let mut texts: Vec<String> = std::env::args().skip(1).collect();
    if texts.is_empty() {
        texts = [
            "The cat sat on the mat.",
            "No cure for the common cold exists , but the symptoms can be treated .",
            "Notwithstanding considerable administrative complications, the municipality eventually \
             authorized the comprehensive reconstruction of the deteriorating infrastructure.",
        ]
        .map(String::from)
        .to_vec();
    }

    let metrics = TextMetrics::default();
    println!("{:>5} {:>5} {:>5} {:>5} {:>7} {:>7} {:>7}  text", "sent", "words", "syl", "hard", "FKGL", "ARI", "DC");
    for text in &texts {
        let stats = match metrics.analyze(text) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("skipping {text:?}: {e}");
                continue;
            }
        };
        println!(
            "{:>5} {:>5} {:>5} {:>5} {:>7.2} {:>7.2} {:>7.2}  {}",
            stats.sentences,
            stats.words,
            stats.syllables,
            stats.difficult_words,
            textmetrics::fkgl(&stats),
            textmetrics::ari(&stats),
            textmetrics::dale_chall(&stats),
            text
        );
    }

    let source = "No cure for the common cold exists , but the symptoms can be treated .";
    let simple = "There is no cure for colds , but the symptoms can be treated .";
    println!(
        "\ncompression of the simplification: chars {:.3}, words {:.3}",
        metrics.compression(source, simple, CompressionUnit::Char).unwrap(),
        metrics.compression(source, simple, CompressionUnit::Word).unwrap()
    );
}

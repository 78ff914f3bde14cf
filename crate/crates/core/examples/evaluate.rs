//! Scoring outputs: SARI and BLEU on raw strings, then a full report over
//! mock runs.

use std::path::Path;

use ctrlsimp::corpus::{flatten, harmonize, AdapterRegistry, CorpusMeta};
use ctrlsimp::evaluation::{aggregate, bleu, render_table, sari, score_run_dir};
use ctrlsimp::inference::{multi_run_blocking, DegenerateThresholds, EndpointConfig, MockModel, MultiRunOptions, PromptSource};
use ctrlsimp::promptgen::{emit_prompt_file, read_prompt_file, PromptBuilder};
use ctrlsimp::seeds;
use ctrlsimp::textmetrics::{AttributeKind, TextMetrics};

fn main() {
    let source = "No cure for the common cold exists , but the symptoms can be treated .";
    let reference = "There is no cure for colds , but the symptoms can be treated .";
    for output in [reference, source, "Colds can not be cured .", "The symptoms can be treated ."] {
        println!(
            "SARI {:>6.2}  BLEU_ref {:>6.2}  BLEU_src {:>6.2}  {output}",
            sari(source, output, &[reference]).unwrap(),
            bleu(output, &[reference], 4).unwrap(),
            bleu(output, &[source], 4).unwrap()
        );
    }

    let metrics = TextMetrics::default();
    let tsv = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pairs200.tsv");
    let entries = harmonize(&tsv, "tsv", &AdapterRegistry::default(), &CorpusMeta::new("Fixture"), &metrics)
        .unwrap()
        .entries;
    let pairs = flatten(&entries);

    let dir = tempfile::tempdir().unwrap();
    let mut scores = Vec::new();
    for kind in [AttributeKind::Fkgl, AttributeKind::WordCompression] {
        let file = dir.path().join(format!("{}.jsonl", kind.name()));
        emit_prompt_file(&pairs, kind, 0, &file, &PromptBuilder::default()).unwrap();
        let prompts = read_prompt_file(&file).unwrap();
        let source = PromptSource::from_file(&file).unwrap();
        for mock in [MockModel::Oracle, MockModel::Echo, MockModel::TruncateP(0.6)] {
            let runs = dir.path().join(format!("{}_{mock}", kind.name()));
            multi_run_blocking(
                &prompts,
                &source,
                &mock,
                &EndpointConfig::default(),
                &DegenerateThresholds::default(),
                &seeds::EVALUATION,
                &runs,
                MultiRunOptions::default(),
            )
            .unwrap();
            scores.extend(score_run_dir(&metrics, &prompts, &runs, None).unwrap());
        }
    }
    println!("\n{}", render_table(&aggregate(&scores)));
}

//! Repeated runs over a prompt file with a mock model and with a custom
//! backend, written to a run directory with a manifest.

use futures::future::BoxFuture;
use futures::FutureExt;

use ctrlsimp::corpus::{AlignmentLevel, AttributeVector, FlatPair};
use ctrlsimp::inference::{
    multi_run_blocking, read_run_file, run_file_name, BackendError, ChatBackend, Completion, CompletionRequest,
    DegenerateThresholds, EndpointConfig, MockModel, MultiRunOptions, PromptSource,
};
use ctrlsimp::promptgen::{emit_prompt_file, PromptBuilder};
use ctrlsimp::textmetrics::AttributeKind;

/// Answers with the first sentence-worth of source words and fails every
/// seventh prompt.
struct FirstWords;

impl ChatBackend for FirstWords {
    fn describe(&self) -> String {
        "first-words".into()
    }

    fn complete<'a>(&'a self, request: CompletionRequest<'a>) -> BoxFuture<'a, Result<Completion, BackendError>> {
        async move {
            if request.index % 7 == 6 {
                return Err(BackendError::Fatal("refused".into()));
            }
            let words: Vec<&str> = request.prompt.source_text.split_whitespace().take(8).collect();
            Ok(Completion {
                text: format!("{} {}.", request.prompt.target_token, words.join(" ")),
                latency_ms: 1,
            })
        }
        .boxed()
    }
}

fn pairs() -> Vec<FlatPair> {
    let texts = [
        ("The committee subsequently approved the proposed modifications to the regulations.", "The group later accepted the planned rule changes."),
        ("Numerous residents of the district publicly criticized the construction project.", "Many people in the area complained about the building work."),
        ("The attending physician strongly recommended a substantial reduction in medication.", "The doctor advised a large cut in medicine."),
    ];
    texts
        .iter()
        .enumerate()
        .map(|(i, (s, r))| FlatPair {
            pair_id: format!("demo_{i:06}_v0"),
            source_text: s.to_string(),
            reference_text: r.to_string(),
            dataset_name: "Demo".into(),
            alignment_level: AlignmentLevel::Sentence,
            source_attrs: AttributeVector { fkgl: 14.0, ari: 15.0, dale_chall: 11.0, char_count: s.len(), word_count: 10 },
            target_attrs: AttributeVector { fkgl: 8.0, ari: 9.0, dale_chall: 9.0, char_count: r.len(), word_count: 8 },
            split: None,
        })
        .collect()
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let prompt_file = dir.path().join("fkgl.jsonl");
    let mut many = Vec::new();
    for round in 0..3 {
        for mut p in pairs() {
            p.pair_id = format!("{}_{round}", p.pair_id);
            many.push(p);
        }
    }
    emit_prompt_file(&many, AttributeKind::Fkgl, 0, &prompt_file, &PromptBuilder::default()).unwrap();
    let prompts = ctrlsimp::promptgen::read_prompt_file(&prompt_file).unwrap();
    let source = PromptSource::from_file(&prompt_file).unwrap();
    let config = EndpointConfig::default();
    let seeds = [37, 15];

    let backends: [(&str, &dyn ChatBackend); 3] =
        [("oracle", &MockModel::Oracle), ("degenerate", &MockModel::Degenerate), ("custom", &FirstWords)];
    for (name, backend) in backends {
        let out = dir.path().join(name);
        let manifest = multi_run_blocking(
            &prompts,
            &source,
            backend,
            &config,
            &DegenerateThresholds::default(),
            &seeds,
            &out,
            MultiRunOptions::default(),
        )
        .unwrap();
        println!("{} (config {}):", manifest.backend, &manifest.config_hash[..12]);
        for run in &manifest.runs {
            println!("  seed {:>2}: {} ok, {} degenerate, {} errors", run.seed, run.ok, run.degenerate, run.errors);
        }
        let rows = read_run_file(&out.join(run_file_name(seeds[0]))).unwrap();
        let r = &rows[rows.len() - 1];
        println!("  last row: {:?} {:?} {:?}", r.status, r.degenerate_reason, r.raw_text.chars().take(60).collect::<String>());
    }
}

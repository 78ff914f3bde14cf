//! Scoring run outputs against their prompts and aggregating across runs.

mod overlap;
mod report;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inference::{self, DegenerateReason, InferenceError, RunOutput, RunStatus};
use crate::promptgen::{parse_token, PromptRecord};
use crate::textmetrics::{AttributeKind, CompressionUnit, TextMetrics};

pub use overlap::{bleu, overlap_tokens, sari};
pub use report::{render_report, render_table, write_report_csv, REPORT_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty text")]
    EmptyText,
    #[error("no reference given")]
    NoReference,
    #[error("run file {file} row {row} is for {found}, prompt file has {expected}")]
    Misaligned {
        file: String,
        row: usize,
        expected: String,
        found: String,
    },
    #[error("run file {file} has {found} rows for {expected} prompts")]
    RowCount {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("writing report: {0}")]
    Csv(#[from] csv::Error),
}

/// Scores of one output. Metric fields are `None` unless `valid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_id: String,
    pub run_seed: u64,
    pub dataset: String,
    pub attribute: AttributeKind,
    pub model: String,
    pub status: RunStatus,
    pub degenerate_reason: Option<DegenerateReason>,
    /// Why an `ok` output could still not be scored.
    pub invalid_reason: Option<String>,
    pub valid: bool,
    pub target_value: f64,
    /// Value of a control token the model put in front of its text.
    pub declared_value: Option<f64>,
    /// Attribute measured on the output text.
    pub predicted_value: Option<f64>,
    pub abs_error: Option<f64>,
    pub sari: Option<f64>,
    pub bleu_vs_ref: Option<f64>,
    pub bleu_vs_src: Option<f64>,
    pub compression_char: Option<f64>,
    pub compression_word: Option<f64>,
}

struct Measured {
    predicted: f64,
    sari: f64,
    bleu_ref: f64,
    bleu_src: f64,
    char_ratio: f64,
    word_ratio: f64,
}

fn measure(metrics: &TextMetrics, prompt: &PromptRecord, text: &str) -> Result<Measured, String> {
    let src = prompt.source_text.as_str();
    let reference = prompt.reference_text.as_str();
    let e = |x: &dyn std::fmt::Display| x.to_string();
    Ok(Measured {
        predicted: metrics.attribute_value(prompt.attribute, src, text).map_err(|x| e(&x))?,
        sari: sari(src, text, &[reference]).map_err(|x| e(&x))?,
        bleu_ref: bleu(text, &[reference], 4).map_err(|x| e(&x))?,
        bleu_src: bleu(text, &[src], 4).map_err(|x| e(&x))?,
        char_ratio: metrics.compression(src, text, CompressionUnit::Char).map_err(|x| e(&x))?,
        word_ratio: metrics.compression(src, text, CompressionUnit::Word).map_err(|x| e(&x))?,
    })
}

/// Scores one output. Control-token stripping, attribute measurement and
/// the overlap metrics all use the text after any leading token.
pub fn score_pair(metrics: &TextMetrics, prompt: &PromptRecord, output: &RunOutput, model: &str) -> PairScore {
    let (token, text) = parse_token(&output.raw_text);
    let mut score = PairScore {
        pair_id: prompt.pair_id.clone(),
        run_seed: output.run_seed,
        dataset: prompt.dataset_name.clone(),
        attribute: prompt.attribute,
        model: model.to_string(),
        status: output.status,
        degenerate_reason: output.degenerate_reason,
        invalid_reason: None,
        valid: false,
        target_value: prompt.target_value,
        declared_value: token.filter(|t| t.kind == prompt.attribute).map(|t| t.value),
        predicted_value: None,
        abs_error: None,
        sari: None,
        bleu_vs_ref: None,
        bleu_vs_src: None,
        compression_char: None,
        compression_word: None,
    };
    if output.status != RunStatus::Ok {
        return score;
    }
    match measure(metrics, prompt, text) {
        Ok(m) => {
            score.valid = true;
            score.predicted_value = Some(m.predicted);
            score.abs_error = Some((prompt.target_value - m.predicted).abs());
            score.sari = Some(m.sari);
            score.bleu_vs_ref = Some(m.bleu_ref);
            score.bleu_vs_src = Some(m.bleu_src);
            score.compression_char = Some(m.char_ratio);
            score.compression_word = Some(m.word_ratio);
        }
        Err(why) => {
            score.status = RunStatus::Error;
            score.invalid_reason = Some(why);
        }
    }
    score
}

/// Scores one run file, matching rows to prompts by position.
pub fn score_run(
    metrics: &TextMetrics,
    prompts: &[PromptRecord],
    outputs: &[RunOutput],
    model: &str,
    file: &str,
) -> Result<Vec<PairScore>, EvalError> {
    if outputs.len() != prompts.len() {
        return Err(EvalError::RowCount {
            file: file.to_string(),
            expected: prompts.len(),
            found: outputs.len(),
        });
    }
    if let Some((row, (p, o))) = prompts
        .iter()
        .zip(outputs)
        .enumerate()
        .find(|(_, (p, o))| p.pair_id != o.pair_id)
    {
        return Err(EvalError::Misaligned {
            file: file.to_string(),
            row: row + 1,
            expected: p.pair_id.clone(),
            found: o.pair_id.clone(),
        });
    }
    Ok(prompts
        .par_iter()
        .zip(outputs)
        .map(|(p, o)| score_pair(metrics, p, o, model))
        .collect())
}

/// Scores every complete run listed in a run directory's manifest.
/// `model` defaults to the backend recorded there.
pub fn score_run_dir(
    metrics: &TextMetrics,
    prompts: &[PromptRecord],
    dir: &Path,
    model: Option<&str>,
) -> Result<Vec<PairScore>, EvalError> {
    let manifest = inference::read_manifest(dir)?;
    let label = model.map_or_else(|| manifest.backend.clone(), str::to_string);
    let mut all = Vec::new();
    for run in manifest.complete_runs() {
        let outputs = inference::read_run_file(&dir.join(&run.file))?;
        all.extend(score_run(metrics, prompts, &outputs, &label, &run.file)?);
    }
    for run in manifest.runs.iter().filter(|r| r.status != inference::RunFileStatus::Complete) {
        log::warn!("run with seed {} is missing and was not scored", run.seed);
    }
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation across runs.
    pub std: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub valid: usize,
    pub degenerate: usize,
    /// Transport failures and outputs that could not be measured.
    pub error: usize,
}

/// Metric summaries of one (dataset, attribute, model) group; `None` when
/// no row in the group was valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub dataset: String,
    pub attribute: AttributeKind,
    pub model: String,
    /// Runs that contributed at least one row.
    pub runs: usize,
    pub counts: Counts,
    pub degenerate_reasons: BTreeMap<String, usize>,
    pub sari: Option<MeanStd>,
    pub bleu_ref: Option<MeanStd>,
    pub bleu_src: Option<MeanStd>,
    pub mae: Option<MeanStd>,
    pub compression_char: Option<MeanStd>,
    pub compression_word: Option<MeanStd>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Sorted by dataset, attribute, model.
    pub groups: Vec<GroupReport>,
}

fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Mean per run over valid rows, then mean and population std across the
/// runs that had any valid row.
fn across_runs(rows: &[&PairScore], pick: fn(&PairScore) -> Option<f64>) -> Option<MeanStd> {
    let mut per_run: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = pick(r).filter(|_| r.valid) {
            per_run.entry(r.run_seed).or_default().push(v);
        }
    }
    let mut means: Vec<f64> = per_run
        .into_values()
        .map(|mut v| sorted_sum(&mut v) / v.len() as f64)
        .collect();
    if means.is_empty() {
        return None;
    }
    let n = means.len() as f64;
    let mean = sorted_sum(&mut means) / n;
    let mut sq: Vec<f64> = means.iter().map(|m| (m - mean).powi(2)).collect();
    let std = (sorted_sum(&mut sq) / n).sqrt();
    Some(MeanStd { mean, std })
}

/// Groups scores by (dataset, attribute, model) and summarises each group.
pub fn aggregate(scores: &[PairScore]) -> EvalReport {
    let mut groups: BTreeMap<(String, AttributeKind, String), Vec<&PairScore>> = BTreeMap::new();
    for s in scores {
        groups
            .entry((s.dataset.clone(), s.attribute, s.model.clone()))
            .or_default()
            .push(s);
    }
    let groups = groups
        .into_iter()
        .map(|((dataset, attribute, model), rows)| {
            let mut counts = Counts {
                total: rows.len(),
                ..Default::default()
            };
            let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
            let mut seeds: HashSet<u64> = HashSet::new();
            for r in &rows {
                seeds.insert(r.run_seed);
                if r.valid {
                    counts.valid += 1;
                } else if r.status == RunStatus::Degenerate {
                    counts.degenerate += 1;
                    if let Some(reason) = r.degenerate_reason {
                        *reasons.entry(reason.name().to_string()).or_default() += 1;
                    }
                } else {
                    counts.error += 1;
                }
            }
            GroupReport {
                dataset,
                attribute,
                model,
                runs: seeds.len(),
                counts,
                degenerate_reasons: reasons,
                sari: across_runs(&rows, |r| r.sari),
                bleu_ref: across_runs(&rows, |r| r.bleu_vs_ref),
                bleu_src: across_runs(&rows, |r| r.bleu_vs_src),
                mae: across_runs(&rows, |r| r.abs_error),
                compression_char: across_runs(&rows, |r| r.compression_char),
                compression_word: across_runs(&rows, |r| r.compression_word),
            }
        })
        .collect();
    EvalReport { groups }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AlignmentLevel, AttributeVector, FlatPair};
    use crate::promptgen::build_prompt;

    fn prompt(attr: AttributeKind, target_fkgl: f64) -> PromptRecord {
        let a = AttributeVector {
            fkgl: target_fkgl,
            ari: 5.0,
            dale_chall: 6.0,
            char_count: 20,
            word_count: 4,
        };
        let pair = FlatPair {
            pair_id: "p".into(),
            source_text: "The feline rested upon the mat.".into(),
            reference_text: "The cat sat on the mat.".into(),
            dataset_name: "d".into(),
            alignment_level: AlignmentLevel::Sentence,
            source_attrs: AttributeVector { fkgl: 9.0, ..a },
            target_attrs: a,
            split: None,
        };
        build_prompt(&pair, attr, 1).unwrap()
    }

    fn output(text: &str, status: RunStatus, seed: u64) -> RunOutput {
        RunOutput {
            pair_id: "p".into(),
            run_seed: seed,
            raw_text: text.into(),
            latency_ms: 0,
            status,
            degenerate_reason: None,
            error: None,
        }
    }

    fn score(seed: u64, err: Option<f64>) -> PairScore {
        PairScore {
            pair_id: "p".into(),
            run_seed: seed,
            dataset: "d".into(),
            attribute: AttributeKind::Fkgl,
            model: "m".into(),
            status: if err.is_some() { RunStatus::Ok } else { RunStatus::Degenerate },
            degenerate_reason: err.is_none().then_some(DegenerateReason::Empty),
            invalid_reason: None,
            valid: err.is_some(),
            target_value: 0.0,
            declared_value: None,
            predicted_value: err,
            abs_error: err,
            sari: err,
            bleu_vs_ref: err,
            bleu_vs_src: err,
            compression_char: err,
            compression_word: err,
        }
    }

    #[test]
    fn strips_token_and_scores_oracle() {
        let m = TextMetrics::default();
        let p = prompt(AttributeKind::Fkgl, -1.0);
        let s = score_pair(&m, &p, &output("<FKGL=-1.0> The cat sat on the mat.", RunStatus::Ok, 1), "x");
        assert!(s.valid);
        assert_eq!(s.declared_value, Some(-1.0));
        let fkgl = crate::textmetrics::fkgl(&m.analyze("The cat sat on the mat.").unwrap());
        assert!((s.predicted_value.unwrap() - fkgl).abs() < 1e-12);
        assert!((s.abs_error.unwrap() - (-1.0 - fkgl).abs()).abs() < 1e-12);
        assert!((s.sari.unwrap() - 100.0).abs() < 1e-9);
        assert!((s.bleu_vs_ref.unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn error_is_target_minus_measured() {
        let m = TextMetrics::default();
        let mut p = prompt(AttributeKind::Fkgl, 9.5);
        p.target_value = 9.5;
        let text = "The cat sat on the mat.";
        let s = score_pair(&m, &p, &output(text, RunStatus::Ok, 1), "x");
        assert!((s.abs_error.unwrap() - (9.5 - s.predicted_value.unwrap()).abs()).abs() < 1e-12);
    }

    #[test]
    fn echo_on_compression_is_identity() {
        let m = TextMetrics::default();
        let p = prompt(AttributeKind::CharCompression, 3.0);
        let s = score_pair(&m, &p, &output(&p.source_text.clone(), RunStatus::Ok, 1), "x");
        assert_eq!(s.predicted_value, Some(1.0));
        assert!((s.bleu_vs_src.unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_rows_carry_nothing() {
        let m = TextMetrics::default();
        let p = prompt(AttributeKind::Fkgl, 3.0);
        let s = score_pair(&m, &p, &output("", RunStatus::Degenerate, 1), "x");
        assert!(!s.valid && s.abs_error.is_none() && s.sari.is_none());
        let s = score_pair(&m, &p, &output("!!!", RunStatus::Ok, 1), "x");
        assert!(!s.valid);
        assert_eq!(s.status, RunStatus::Error);
        assert!(s.invalid_reason.is_some());
    }

    #[test]
    fn aggregation_rules() {
        let r = aggregate(&[score(1, Some(1.0)), score(1, Some(3.0))]);
        let g = &r.groups[0];
        assert_eq!(g.mae, Some(MeanStd { mean: 2.0, std: 0.0 }));
        let r = aggregate(&[score(1, Some(2.0)), score(2, Some(4.0))]);
        assert_eq!(r.groups[0].mae, Some(MeanStd { mean: 3.0, std: 1.0 }));
        let r = aggregate(&[score(1, None), score(2, None)]);
        let g = &r.groups[0];
        assert_eq!(g.mae, None);
        assert_eq!(g.counts, Counts { total: 2, valid: 0, degenerate: 2, error: 0 });
        assert_eq!(g.degenerate_reasons["empty"], 2);
    }

    #[test]
    fn aggregation_order_insensitive() {
        let mut rows: Vec<PairScore> = (0..60).map(|i| score(i % 3, Some((i as f64 * 0.37).sin().abs() * 1e3))).collect();
        let a = aggregate(&rows);
        rows.reverse();
        rows.swap(3, 40);
        assert_eq!(aggregate(&rows), a);
    }
}

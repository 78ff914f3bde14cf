use std::io::Write;

use super::{EvalReport, GroupReport, MeanStd};

/// CSV header of [`render_report`], in order.
pub const REPORT_COLUMNS: [&str; 20] = [
    "dataset",
    "attribute",
    "model",
    "runs",
    "total",
    "valid",
    "degenerate",
    "error",
    "sari_mean",
    "sari_std",
    "bleu_ref_mean",
    "bleu_ref_std",
    "bleu_src_mean",
    "bleu_src_std",
    "mae_mean",
    "mae_std",
    "compression_char_mean",
    "compression_char_std",
    "compression_word_mean",
    "compression_word_std",
];

const FOOTNOTES: [&str; 3] = [
    "MAE compares the rounded control-token target with the attribute measured on the output, so up to 0.05 of it is token rounding.",
    "BLEU is sentence-level with add-one smoothing above unigrams, averaged over pairs.",
    "Means and standard deviations are taken across runs over valid rows only; blank cells mean no valid rows.",
];

fn cells(m: Option<MeanStd>) -> [String; 2] {
    match m {
        Some(m) => [format!("{:.4}", m.mean), format!("{:.4}", m.std)],
        None => [String::new(), String::new()],
    }
}

fn row(g: &GroupReport) -> Vec<String> {
    let mut r = vec![
        g.dataset.clone(),
        g.attribute.name().to_string(),
        g.model.clone(),
        g.runs.to_string(),
        g.counts.total.to_string(),
        g.counts.valid.to_string(),
        g.counts.degenerate.to_string(),
        g.counts.error.to_string(),
    ];
    for m in [g.sari, g.bleu_ref, g.bleu_src, g.mae, g.compression_char, g.compression_word] {
        r.extend(cells(m));
    }
    r
}

pub fn write_report_csv<W: Write>(report: &EvalReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for g in &report.groups {
        w.write_record(row(g))?;
    }
    w.flush()?;
    Ok(())
}

fn pm(m: Option<MeanStd>, digits: usize) -> String {
    match m {
        Some(m) => format!("{:.*} ± {:.*}", digits, m.mean, digits, m.std),
        None => "n/a".to_string(),
    }
}

/// Aligned plain-text rendering with footnotes.
pub fn render_table(report: &EvalReport) -> String {
    let header = [
        "dataset", "attribute", "model", "SARI", "BLEU_ref", "BLEU_src", "MAE", "CR_char", "CR_word", "valid/total",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for g in &report.groups {
        rows.push(vec![
            g.dataset.clone(),
            g.attribute.name().to_string(),
            g.model.clone(),
            pm(g.sari, 2),
            pm(g.bleu_ref, 2),
            pm(g.bleu_src, 2),
            pm(g.mae, 3),
            pm(g.compression_char, 3),
            pm(g.compression_word, 3),
            format!("{}/{}", g.counts.valid, g.counts.total),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    if report.groups.iter().any(|g| g.counts.degenerate > 0) {
        out.push('\n');
        for g in report.groups.iter().filter(|g| g.counts.degenerate > 0) {
            let reasons: Vec<String> = g.degenerate_reasons.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!(
                "degenerate {} / {} / {}: {}\n",
                g.dataset,
                g.attribute.name(),
                g.model,
                reasons.join(", ")
            ));
        }
    }
    out.push('\n');
    for (i, note) in FOOTNOTES.iter().enumerate() {
        out.push_str(&format!("[{}] {note}\n", i + 1));
    }
    out
}

/// CSV and text renderings of `report`.
pub fn render_report(report: &EvalReport) -> (String, String) {
    let mut csv_bytes = Vec::new();
    write_report_csv(report, &mut csv_bytes).expect("writing to memory");
    (String::from_utf8(csv_bytes).expect("utf-8 csv"), render_table(report))
}

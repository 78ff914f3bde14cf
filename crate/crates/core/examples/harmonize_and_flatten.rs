//! Reading raw corpora into the harmonized format, expanding them into
//! pairs, and merging two overlapping subsets.

use std::io::Cursor;
use std::path::Path;

use ctrlsimp::corpus::{
    flatten, harmonize, harmonize_reader, merge_dual_subsets, AdapterRegistry, CorpusMeta, JsonlAdapter, Split,
};
use ctrlsimp::textmetrics::TextMetrics;

fn main() {
    let metrics = TextMetrics::default();
    let registry = AdapterRegistry::with_defaults();

    let tsv = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pairs200.tsv");
    let outcome = harmonize(&tsv, "tsv", &registry, &CorpusMeta::new("Fixture"), &metrics).unwrap();
    let first = &outcome.entries[0];
    println!("{} entries from {}, {} rejected", outcome.entries.len(), tsv.display(), outcome.skipped());
    println!("first: {} FKGL {:.2}  {:?}", first.instance_id, first.source_metrics.fkgl, first.source_text);

    // a multi-reference corpus with one malformed line
    let raw = concat!(
        r#"{"id": "a1", "source": "The committee subsequently approved the proposal.", "simplifications": ["The group said yes.", "The committee later agreed."], "native_split": "train"}"#,
        "\n",
        r#"{"source": "Precipitation is anticipated tomorrow.", "simplification": "It will rain tomorrow."}"#,
        "\n",
        "not json\n",
    );
    let mut meta = CorpusMeta::new("Multi Ref");
    meta.native_split = Some(Split::Test);
    let multi = harmonize_reader(&mut Cursor::new(raw), &JsonlAdapter, &meta, &metrics).unwrap();
    for r in &multi.rejections {
        println!("rejected {r}");
    }
    let pairs = flatten(&multi.entries);
    for p in &pairs {
        println!(
            "{:<22} {:<5} src {:>5.2} -> ref {:>5.2}  {}",
            p.pair_id,
            p.split.map(|s| s.to_string()).unwrap_or_default(),
            p.source_attrs.fkgl,
            p.target_attrs.fkgl,
            p.reference_text
        );
    }

    // two subsets sharing half their sources
    let all = flatten(&outcome.entries);
    let (a, b) = (&all[..120], &all[60..]);
    let (merged, stats) = merge_dual_subsets(a, b, 0);
    println!(
        "\nmerged {} + {} pairs into {}: {} shared sources, {} kept from A, {} from B",
        a.len(),
        b.len(),
        merged.len(),
        stats.overlapping_sources,
        stats.overlaps_kept_from_a,
        stats.overlaps_kept_from_b
    );
}

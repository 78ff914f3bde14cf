//! Outlier and monotonicity filtering of a prepared corpus.

use std::path::Path;

use ctrlsimp::corpus::{flatten, harmonize, AdapterRegistry, CorpusMeta};
use ctrlsimp::partition::{mono_filter, percentile_filter, DEFAULT_PERCENTILE_ATTRIBUTES};
use ctrlsimp::textmetrics::TextMetrics;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pairs200.tsv");
    let metrics = TextMetrics::default();
    let entries = harmonize(&path, "tsv", &AdapterRegistry::default(), &CorpusMeta::new("Fixture"), &metrics)
        .unwrap()
        .entries;
    let pairs = flatten(&entries);

    let (kept, stats) = percentile_filter(pairs, 5.0, 95.0, &DEFAULT_PERCENTILE_ATTRIBUTES).unwrap();
    println!("percentile band 5..95: kept {} of {}", kept.len(), stats.input);
    for (attr, (lo, hi)) in &stats.bounds {
        let out = stats.removed_by_attribute.get(attr).copied().unwrap_or(0);
        println!("  {attr:<12} [{lo:>7.2}, {hi:>7.2}]  {out} outside");
    }

    let (simpler, mono) = mono_filter(kept);
    println!(
        "\nstrictly simpler on FKGL, ARI and Dale-Chall: kept {} of {} ({:.1}% removed)",
        simpler.len(),
        mono.input(),
        100.0 * mono.removal_rate()
    );
}

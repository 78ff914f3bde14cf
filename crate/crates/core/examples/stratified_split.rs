//! Searching stratification strategies and splitting a corpus 80/10/10.

use std::path::Path;

use ctrlsimp::corpus::{flatten, harmonize, AdapterRegistry, CorpusMeta, FlatPair, Split};
use ctrlsimp::partition::{select_strategy, stratified_split, SplitFractions, StratVariable, StrategySearch, StratificationStrategy};
use ctrlsimp::seeds;
use ctrlsimp::textmetrics::TextMetrics;

fn load() -> Vec<FlatPair> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pairs200.tsv");
    let metrics = TextMetrics::default();
    let outcome = harmonize(&path, "tsv", &AdapterRegistry::default(), &CorpusMeta::new("Fixture"), &metrics).unwrap();
    flatten(&outcome.entries)
}

fn main() {
    let pairs = load();

    let one = StratificationStrategy {
        variable: StratVariable::Fkgl,
        bins: 10,
        seed: seeds::PARTITIONING[0],
    };
    let r = stratified_split(&pairs, one, SplitFractions::default()).unwrap();
    println!(
        "fixed strategy: train {} dev {} test {}, objective {:.4}",
        r.count(Split::Train),
        r.count(Split::Dev),
        r.count(Split::Test),
        r.score()
    );

    let search = StrategySearch {
        seeds: seeds::PARTITIONING[..5].to_vec(),
        ..StrategySearch::default()
    };
    let outcome = select_strategy(&pairs, &search).unwrap();
    println!("\n{:<18} {:>4} {:>9} {:>12}", "variable", "bins", "mean KS", "best seed");
    for s in &outcome.scores {
        println!("{:<18} {:>4} {:>9.4} {:>12}", s.variable.to_string(), s.bins, s.mean_ks, s.best_seed);
    }
    let best = &outcome.best;
    println!("\nchosen: {} with {} bins, seed {}", best.strategy.variable, best.strategy.bins, best.strategy.seed);
    for (attr, ks) in &best.ks_per_attribute {
        println!("  {attr:<18} KS {ks:.4}");
    }
}

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FlatPair;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    /// Distinct source texts present in both subsets.
    pub overlapping_sources: usize,
    /// Overlapping sources resolved in favour of subset A.
    pub overlaps_kept_from_a: usize,
    pub overlaps_kept_from_b: usize,
    pub output_pairs: usize,
}

/// Merges two subsets built from the same source corpus (e.g. a lexical and
/// a syntactic simplification layer).
///
/// Sources found in only one subset keep all of their pairs. For sources in
/// both, a seeded fair coin picks one subset and only that subset's pairs
/// survive, so no source text comes from both sides. Coins are drawn in the
/// order the overlapping sources first appear in `a`. Output lists the
/// surviving pairs of `a` followed by those of `b`, each in input order.
pub fn merge_dual_subsets(a: &[FlatPair], b: &[FlatPair], seed: u64) -> (Vec<FlatPair>, MergeStats) {
    let in_b: HashSet<&str> = b.iter().map(|p| p.source_text.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut winner_is_a: HashMap<&str, bool> = HashMap::new();
    let mut stats = MergeStats::default();
    for pair in a {
        let src = pair.source_text.as_str();
        if in_b.contains(src) && !winner_is_a.contains_key(src) {
            let keep_a = rng.random_bool(0.5);
            winner_is_a.insert(src, keep_a);
            stats.overlapping_sources += 1;
            if keep_a {
                stats.overlaps_kept_from_a += 1;
            } else {
                stats.overlaps_kept_from_b += 1;
            }
        }
    }
    let mut out: Vec<FlatPair> = a
        .iter()
        .filter(|p| winner_is_a.get(p.source_text.as_str()).copied().unwrap_or(true))
        .cloned()
        .collect();
    out.extend(
        b.iter()
            .filter(|p| !winner_is_a.get(p.source_text.as_str()).copied().unwrap_or(false))
            .cloned(),
    );
    stats.output_pairs = out.len();
    (out, stats)
}

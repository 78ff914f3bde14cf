mod common;

use std::collections::HashSet;
use std::io::Cursor;

use common::{attrs, pair};
use ctrlsimp::corpus::{
    flatten, harmonize_reader, merge_dual_subsets, AlignmentLevel, AttributeVector, CompressionRatios, CorpusMeta,
    FlatPair, HarmonizedEntry, SimplificationRecord, Split, TsvAdapter,
};
use ctrlsimp::jsonl::{parse_jsonl, write_jsonl};
use ctrlsimp::textmetrics::TextMetrics;
use proptest::prelude::*;

fn attr_vec() -> impl Strategy<Value = AttributeVector> {
    (-20.0f64..40.0, -20.0f64..40.0, 0.0f64..20.0, 1usize..5000, 1usize..800)
        .prop_map(|(f, a, d, c, w)| attrs(f, a, d, c.max(w), w))
}

fn simplification() -> impl Strategy<Value = SimplificationRecord> {
    (
        "\\PC{1,40}",
        1u32..5,
        attr_vec(),
        0.01f64..3.0,
        0.01f64..3.0,
        prop::option::of(prop::collection::btree_map("[a-z]{1,8}", prop_oneof![Just(-1.0), 0.0f64..1.0], 0..3)),
    )
        .prop_map(|(text, version, target_metrics, c, w, similarity)| SimplificationRecord {
            text,
            version,
            target_metrics,
            compression: CompressionRatios {
                char_ratio: c,
                word_ratio: w,
            },
            similarity,
        })
}

fn entry() -> impl Strategy<Value = HarmonizedEntry> {
    (
        "[a-z]{1,6}_[0-9]{6}",
        "\\PC{1,60}",
        "[A-Za-z-]{1,12}",
        prop_oneof![Just(AlignmentLevel::Sentence), Just(AlignmentLevel::Document)],
        prop::option::of(prop_oneof![Just(Split::Train), Just(Split::Dev), Just(Split::Test)]),
        attr_vec(),
        prop::collection::vec(simplification(), 1..4),
    )
        .prop_map(|(id, source, name, alignment_level, native_split, source_metrics, simplifications)| {
            HarmonizedEntry {
                instance_id: id,
                source_text: source,
                dataset_name: name,
                domain: "news".into(),
                language: "en".into(),
                annotation_type: "human".into(),
                alignment_level,
                native_split,
                source_metrics,
                simplifications,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jsonl_round_trip_is_lossless(entries in prop::collection::vec(entry(), 0..6)) {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &entries).unwrap();
        let back: Vec<HarmonizedEntry> = parse_jsonl(Cursor::new(buf), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, entries);
    }

    #[test]
    fn flatten_preserves_simplification_count(entries in prop::collection::vec(entry(), 0..8)) {
        let total: usize = entries.iter().map(|e| e.simplifications.len()).sum();
        prop_assert_eq!(flatten(&entries).len(), total);
    }

    #[test]
    fn merge_never_duplicates_a_source(
        a_src in prop::collection::vec(0u8..30, 0..40),
        b_src in prop::collection::vec(0u8..30, 0..40),
        seed in any::<u64>(),
    ) {
        let mk = |tag: &str, src: &[u8]| -> Vec<FlatPair> {
            src.iter().enumerate().map(|(i, s)| {
                let mut p = pair(&format!("{tag}{i}"), attrs(9.0, 9.0, 9.0, 40, 8), attrs(5.0, 5.0, 5.0, 30, 6), None);
                p.source_text = format!("source {s}");
                p
            }).collect()
        };
        let (a, b) = (mk("a", &a_src), mk("b", &b_src));
        let (merged, _) = merge_dual_subsets(&a, &b, seed);
        let from_a: HashSet<&str> = merged.iter().filter(|p| p.pair_id.starts_with('a')).map(|p| p.source_text.as_str()).collect();
        let from_b: HashSet<&str> = merged.iter().filter(|p| p.pair_id.starts_with('b')).map(|p| p.source_text.as_str()).collect();
        prop_assert!(from_a.is_disjoint(&from_b));
        let all: HashSet<&str> = a.iter().chain(&b).map(|p| p.source_text.as_str()).collect();
        let kept: HashSet<&str> = from_a.union(&from_b).copied().collect();
        prop_assert_eq!(kept, all);
    }
}

#[test]
fn flatten_of_harmonize_keeps_every_simplification() {
    let tsv = "A hard sentence here.\tEasy one.\tAnother easy one.\tA third.\nSecond source text.\tSimple.\n";
    let outcome = harmonize_reader(
        &mut Cursor::new(tsv),
        &TsvAdapter,
        &CorpusMeta::new("Fixture"),
        &TextMetrics::default(),
    )
    .unwrap();
    let pairs = flatten(&outcome.entries);
    assert_eq!(pairs.len(), 4);
    assert_eq!(pairs[0].pair_id, "fixture_000000_v1");
    assert_eq!(pairs[2].pair_id, "fixture_000000_v3");
    assert!(pairs[..3].iter().all(|p| p.source_text == "A hard sentence here."));
}

#[test]
fn merge_coin_is_fair_over_a_thousand_overlaps() {
    let mk = |tag: &str| -> Vec<FlatPair> {
        (0..1000)
            .map(|i| {
                let mut p = pair(&format!("{tag}{i}"), attrs(9.0, 9.0, 9.0, 40, 8), attrs(5.0, 5.0, 5.0, 30, 6), None);
                p.source_text = format!("shared source {i}");
                p
            })
            .collect()
    };
    let (a, b) = (mk("a"), mk("b"));
    for seed in [0u64, 1, 2, 42, 1234] {
        let (merged, stats) = merge_dual_subsets(&a, &b, seed);
        assert_eq!(stats.overlapping_sources, 1000);
        assert_eq!(merged.len(), 1000);
        let frac = stats.overlaps_kept_from_a as f64 / 1000.0;
        assert!((0.44..=0.56).contains(&frac), "seed {seed}: {frac}");
        assert_eq!(merge_dual_subsets(&a, &b, seed).0, merged);
    }
}

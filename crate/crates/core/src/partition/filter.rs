use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PartitionError, StratVariable};
use crate::corpus::FlatPair;

pub const DEFAULT_PERCENTILE_ATTRIBUTES: [StratVariable; 4] = [
    StratVariable::Fkgl,
    StratVariable::Ari,
    StratVariable::DaleChall,
    StratVariable::CharCount,
];

const MIN_PAIRS_FOR_PERCENTILES: usize = 100;

/// Nearest-rank percentile of already sorted values: the element at index
/// `round(p / 100 * (n - 1))`, ties to even.
pub fn percentile_nearest(sorted: &[f64], p: f64) -> f64 {
    let idx = (p / 100.0 * (sorted.len() - 1) as f64).round_ties_even() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PercentileStats {
    pub input: usize,
    pub removed: usize,
    /// Pairs falling outside the bounds on each attribute. A pair can count
    /// against several attributes.
    pub removed_by_attribute: BTreeMap<String, usize>,
    /// `(P_lo, P_hi)` per attribute.
    pub bounds: BTreeMap<String, (f64, f64)>,
}

/// Drops pairs whose source value on any of `attributes` lies outside the
/// `[lo, hi]` percentile band of that attribute.
pub fn percentile_filter(
    pairs: Vec<FlatPair>,
    lo: f64,
    hi: f64,
    attributes: &[StratVariable],
) -> Result<(Vec<FlatPair>, PercentileStats), PartitionError> {
    if pairs.is_empty() {
        return Err(PartitionError::Empty);
    }
    if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
        return Err(PartitionError::InvalidPercentiles(lo, hi));
    }
    if pairs.len() < MIN_PAIRS_FOR_PERCENTILES {
        log::warn!(
            "percentile filter on only {} pairs; bounds will be coarse",
            pairs.len()
        );
    }
    let mut stats = PercentileStats {
        input: pairs.len(),
        ..Default::default()
    };
    let mut bounds = Vec::with_capacity(attributes.len());
    for &attr in attributes {
        let mut v: Vec<f64> = pairs.iter().map(|p| attr.value(&p.source_attrs)).collect();
        v.sort_by(f64::total_cmp);
        let b = (percentile_nearest(&v, lo), percentile_nearest(&v, hi));
        stats.bounds.insert(attr.name().to_string(), b);
        stats.removed_by_attribute.insert(attr.name().to_string(), 0);
        bounds.push((attr, b));
    }
    let mut kept = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let mut out = false;
        for &(attr, (p_lo, p_hi)) in &bounds {
            let v = attr.value(&pair.source_attrs);
            if v < p_lo || v > p_hi {
                out = true;
                *stats.removed_by_attribute.get_mut(attr.name()).unwrap() += 1;
            }
        }
        if out {
            stats.removed += 1;
        } else {
            kept.push(pair);
        }
    }
    Ok((kept, stats))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMonoStats {
    pub input: usize,
    pub removed: usize,
    /// Pairs where the reference is not strictly simpler on that metric.
    pub fkgl_violations: usize,
    pub ari_violations: usize,
    pub dale_chall_violations: usize,
}

impl DatasetMonoStats {
    pub fn removal_rate(&self) -> f64 {
        if self.input == 0 {
            0.0
        } else {
            self.removed as f64 / self.input as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonoStats {
    pub per_dataset: BTreeMap<String, DatasetMonoStats>,
}

impl MonoStats {
    pub fn input(&self) -> usize {
        self.per_dataset.values().map(|d| d.input).sum()
    }

    pub fn removed(&self) -> usize {
        self.per_dataset.values().map(|d| d.removed).sum()
    }

    pub fn removal_rate(&self) -> f64 {
        match self.input() {
            0 => 0.0,
            n => self.removed() as f64 / n as f64,
        }
    }
}

/// Keeps pairs whose reference is strictly lower than the source on FKGL,
/// ARI and Dale-Chall. Ties count as violations.
pub fn mono_filter(pairs: Vec<FlatPair>) -> (Vec<FlatPair>, MonoStats) {
    let mut stats = MonoStats::default();
    let mut kept = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let d = stats.per_dataset.entry(pair.dataset_name.clone()).or_default();
        d.input += 1;
        let (s, t) = (&pair.source_attrs, &pair.target_attrs);
        let fkgl_ok = t.fkgl < s.fkgl;
        let ari_ok = t.ari < s.ari;
        let dc_ok = t.dale_chall < s.dale_chall;
        d.fkgl_violations += usize::from(!fkgl_ok);
        d.ari_violations += usize::from(!ari_ok);
        d.dale_chall_violations += usize::from(!dc_ok);
        if fkgl_ok && ari_ok && dc_ok {
            kept.push(pair);
        } else {
            d.removed += 1;
        }
    }
    for (name, d) in &stats.per_dataset {
        log::info!(
            "{name}: removed {} of {} pairs ({:.1}%) as non-monotonic",
            d.removed,
            d.input,
            100.0 * d.removal_rate()
        );
    }
    (kept, stats)
}

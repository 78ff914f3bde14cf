use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::split::{control_sorted, Reference};
use super::strata::quantile_strata;
use super::{largest_remainder, PartitionError, SplitFractions, StratVariable};
use crate::corpus::{FlatPair, Split};
use crate::divergence::{emd_sorted, jsd_samples, ks_statistic_sorted, DEFAULT_BINS};
use crate::textmetrics::AttributeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Draw from the whole pool.
    Global,
    /// Draw separately from each native split.
    SplitWise,
}

impl SamplingMode {
    pub const ALL: [SamplingMode; 2] = [SamplingMode::Global, SamplingMode::SplitWise];

    pub fn name(self) -> &'static str {
        match self {
            SamplingMode::Global => "global",
            SamplingMode::SplitWise => "split_wise",
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown sampling mode {0:?} (expected global or split_wise)")]
pub struct UnknownMode(pub String);

impl FromStr for SamplingMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "global" => Ok(SamplingMode::Global),
            "split_wise" | "splitwise" => Ok(SamplingMode::SplitWise),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    /// Equal-frequency strata on the sampling variable.
    pub strata: usize,
    /// Per-split quotas in split-wise mode.
    pub fractions: SplitFractions,
    /// Histogram bins for JSD.
    pub jsd_bins: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            strata: 10,
            fractions: SplitFractions::default(),
            jsd_bins: DEFAULT_BINS,
        }
    }
}

/// Stratified proportional sample of `k` indices from `pool` (indices into
/// `pairs`), drawn without replacement.
fn stratified_take(
    pairs: &[FlatPair],
    pool: &[usize],
    k: usize,
    variable: StratVariable,
    strata: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let values: Vec<f64> = pool.iter().map(|&i| variable.value(&pairs[i].source_attrs)).collect();
    let (labels, _) = quantile_strata(&values, strata.max(1));
    let n_strata = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
    for (pos, &s) in labels.iter().enumerate() {
        groups[s].push(pool[pos]);
    }
    let weights: Vec<f64> = groups.iter().map(|g| g.len() as f64).collect();
    let quotas = largest_remainder(k, &weights);
    let mut out = Vec::with_capacity(k);
    for (g, q) in groups.iter_mut().zip(quotas) {
        g.shuffle(rng);
        out.extend_from_slice(&g[..q]);
    }
    out
}

fn subsample_indices(
    pairs: &[FlatPair],
    k: usize,
    variable: StratVariable,
    mode: SamplingMode,
    seed: u64,
    options: &SamplingOptions,
) -> Result<Vec<usize>, PartitionError> {
    if pairs.is_empty() {
        return Err(PartitionError::Empty);
    }
    if k > pairs.len() {
        return Err(PartitionError::SampleTooLarge {
            k,
            available: pairs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = match mode {
        SamplingMode::Global => {
            let all: Vec<usize> = (0..pairs.len()).collect();
            stratified_take(pairs, &all, k, variable, options.strata, &mut rng)
        }
        SamplingMode::SplitWise => {
            options.fractions.validate()?;
            let mut pools: BTreeMap<Split, Vec<usize>> = Split::ALL.iter().map(|&s| (s, Vec::new())).collect();
            for (i, p) in pairs.iter().enumerate() {
                let s = p.split.ok_or_else(|| PartitionError::MissingNativeSplit(p.pair_id.clone()))?;
                pools.get_mut(&s).unwrap().push(i);
            }
            let quotas = largest_remainder(k, &options.fractions.as_array());
            let mut out = Vec::with_capacity(k);
            for (split, q) in Split::ALL.into_iter().zip(quotas) {
                let pool = &pools[&split];
                if q > pool.len() {
                    return Err(PartitionError::InsufficientSplit {
                        split,
                        needed: q,
                        available: pool.len(),
                    });
                }
                out.extend(stratified_take(pairs, pool, q, variable, options.strata, &mut rng));
            }
            out
        }
    };
    picked.sort_unstable();
    Ok(picked)
}

/// Draws exactly `k` distinct pairs, stratified on the source `variable`.
///
/// Global mode allocates `k` across equal-frequency strata of the whole
/// pool. Split-wise mode first divides `k` across the native train/dev/test
/// splits by `options.fractions`, then samples each split the same way; it
/// requires every pair to carry its native split. Output keeps input order.
pub fn subsample(
    pairs: &[FlatPair],
    k: usize,
    variable: StratVariable,
    mode: SamplingMode,
    seed: u64,
    options: &SamplingOptions,
) -> Result<Vec<FlatPair>, PartitionError> {
    Ok(subsample_indices(pairs, k, variable, mode, seed, options)?
        .into_iter()
        .map(|i| pairs[i].clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeDivergence {
    pub ks: f64,
    pub jsd: f64,
    pub emd: f64,
}

/// Divergences of one subset size, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPoint {
    pub size: usize,
    /// Macro average over the five control attributes.
    pub mean_ks: f64,
    pub mean_jsd: f64,
    pub mean_emd: f64,
    pub per_attribute: BTreeMap<String, AttributeDivergence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingCurve {
    pub mode: SamplingMode,
    /// Ordered by strictly increasing size.
    pub points: Vec<SamplingPoint>,
}

impl SamplingCurve {
    pub fn sizes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.size as f64).collect()
    }

    pub fn mean_ks(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_ks).collect()
    }
}

fn divergence_point(
    pairs: &[FlatPair],
    reference: &Reference,
    size: usize,
    variable: StratVariable,
    mode: SamplingMode,
    seeds: &[u64],
    options: &SamplingOptions,
) -> Result<SamplingPoint, PartitionError> {
    let mut sums = vec![[0.0f64; 3]; AttributeKind::ALL.len()];
    for &seed in seeds {
        let idx = subsample_indices(pairs, size, variable, mode, seed, options)?;
        for (k, kind) in AttributeKind::ALL.iter().enumerate() {
            let sub = control_sorted(idx.iter().map(|&i| pairs[i].control_value(*kind)));
            let full = &reference.sorted[k];
            sums[k][0] += ks_statistic_sorted(&sub, full);
            sums[k][1] += jsd_samples(&sub, full, options.jsd_bins)?;
            sums[k][2] += emd_sorted(&sub, full);
        }
    }
    let n = seeds.len() as f64;
    let mut per_attribute = BTreeMap::new();
    let mut macro_avg = [0.0f64; 3];
    for (k, kind) in AttributeKind::ALL.iter().enumerate() {
        let d = AttributeDivergence {
            ks: sums[k][0] / n,
            jsd: sums[k][1] / n,
            emd: sums[k][2] / n,
        };
        macro_avg[0] += d.ks;
        macro_avg[1] += d.jsd;
        macro_avg[2] += d.emd;
        per_attribute.insert(kind.name().to_string(), d);
    }
    let m = AttributeKind::ALL.len() as f64;
    Ok(SamplingPoint {
        size,
        mean_ks: macro_avg[0] / m,
        mean_jsd: macro_avg[1] / m,
        mean_emd: macro_avg[2] / m,
        per_attribute,
    })
}

/// For every mode and subset size, the divergence of the subset from the
/// full set on each control attribute, averaged over `seeds`.
pub fn sampling_experiment(
    pairs: &[FlatPair],
    variable: StratVariable,
    sizes: &[usize],
    seeds: &[u64],
    modes: &[SamplingMode],
    options: &SamplingOptions,
) -> Result<Vec<SamplingCurve>, PartitionError> {
    if pairs.is_empty() {
        return Err(PartitionError::Empty);
    }
    if sizes.is_empty() || seeds.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(PartitionError::InvalidSizes(format!("{sizes:?}")));
    }
    let reference = Reference::new(pairs);
    modes
        .iter()
        .map(|&mode| {
            let points = sizes
                .par_iter()
                .map(|&size| divergence_point(pairs, &reference, size, variable, mode, seeds, options))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SamplingCurve { mode, points })
        })
        .collect()
}

/// Parses `start:end:step` (end inclusive) or a comma-separated list.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>, PartitionError> {
    let bad = || PartitionError::InvalidSizes(spec.to_string());
    let spec = spec.trim();
    let sizes: Vec<usize> = if spec.contains(':') {
        let parts: Vec<usize> = spec
            .split(':')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, end, step] = parts[..] else {
            return Err(bad());
        };
        if step == 0 || start == 0 || start > end {
            return Err(bad());
        }
        (start..=end).step_by(step).collect()
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?
    };
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad());
    }
    Ok(sizes)
}

/// CSV with columns `mode,size,attribute,mean_ks,mean_jsd,mean_emd`; the
/// macro average appears under attribute `ALL`.
pub fn write_curves_csv<W: Write>(curves: &[SamplingCurve], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "size", "attribute", "mean_ks", "mean_jsd", "mean_emd"])?;
    for c in curves {
        for p in &c.points {
            for (attr, d) in &p.per_attribute {
                w.write_record([
                    c.mode.name(),
                    &p.size.to_string(),
                    attr,
                    &d.ks.to_string(),
                    &d.jsd.to_string(),
                    &d.emd.to_string(),
                ])?;
            }
            w.write_record([
                c.mode.name(),
                &p.size.to_string(),
                "ALL",
                &p.mean_ks.to_string(),
                &p.mean_jsd.to_string(),
                &p.mean_emd.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

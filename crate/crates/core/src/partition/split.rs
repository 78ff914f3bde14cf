use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::strata::quantile_strata;
use super::{PartitionError, SplitFractions, StratVariable, StratificationStrategy};
use crate::corpus::{FlatPair, Split};
use crate::divergence::ks_statistic_sorted;
use crate::textmetrics::AttributeKind;

const MIN_PAIRS_FOR_SPLIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub assignments: BTreeMap<String, Split>,
    /// Mean of dev-vs-full and test-vs-full KS per control attribute.
    pub ks_per_attribute: BTreeMap<String, f64>,
    /// KS of every non-empty split against the full set, keyed by split then
    /// attribute.
    pub ks_by_split: BTreeMap<String, BTreeMap<String, f64>>,
    pub strategy: StratificationStrategy,
    /// Set when the bin count exceeded the distinct values of the variable
    /// and one stratum per distinct value was used instead.
    pub distinct_value_strata: bool,
}

impl SplitResult {
    /// Mean KS over dev and test and all five control attributes; the
    /// objective minimised by [`select_strategy`].
    pub fn score(&self) -> f64 {
        mean_eval_ks(&self.ks_by_split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignments.values().filter(|&&s| s == split).count()
    }

    /// Writes the assigned split onto each pair.
    pub fn apply(&self, pairs: &mut [FlatPair]) {
        for p in pairs {
            p.split = self.assignments.get(&p.pair_id).copied();
        }
    }
}

fn mean_eval_ks(by_split: &BTreeMap<String, BTreeMap<String, f64>>) -> f64 {
    let vals: Vec<f64> = [Split::Dev, Split::Test]
        .iter()
        .filter_map(|s| by_split.get(s.name()))
        .flat_map(|m| m.values().copied())
        .collect();
    if vals.is_empty() {
        1.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Sorted full-set values of the five control attributes.
pub(crate) struct Reference {
    pub(crate) sorted: Vec<Vec<f64>>,
}

impl Reference {
    pub(crate) fn new(pairs: &[FlatPair]) -> Self {
        let sorted = AttributeKind::ALL
            .iter()
            .map(|&k| control_sorted(pairs.iter().map(|p| p.control_value(k))))
            .collect();
        Self { sorted }
    }
}

pub(crate) fn control_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

fn check_input(pairs: &[FlatPair]) -> Result<(), PartitionError> {
    if pairs.len() < MIN_PAIRS_FOR_SPLIT {
        return Err(PartitionError::TooFewPairs {
            got: pairs.len(),
            min: MIN_PAIRS_FOR_SPLIT,
        });
    }
    let mut seen = HashSet::with_capacity(pairs.len());
    for p in pairs {
        if !seen.insert(p.pair_id.as_str()) {
            return Err(PartitionError::DuplicatePairId(p.pair_id.clone()));
        }
        for k in AttributeKind::ALL {
            if !p.control_value(k).is_finite() {
                return Err(PartitionError::NonFiniteAttribute(p.pair_id.clone()));
            }
        }
    }
    Ok(())
}

/// Per-stratum split counts. Each split gets the floor or ceiling of its
/// share; leftover units go to the splits whose running total across the
/// strata seen so far lags its target the most.
fn allocate(stratum_sizes: &[usize], fractions: [f64; 3]) -> Vec<[usize; 3]> {
    let mut allocated = [0usize; 3];
    let mut seen = 0usize;
    let mut out = Vec::with_capacity(stratum_sizes.len());
    for &n in stratum_sizes {
        seen += n;
        let quotas = fractions.map(|f| f * n as f64);
        let mut counts = quotas.map(|q| (q + 1e-9).floor() as usize);
        let mut left = n - counts.iter().sum::<usize>();
        let mut cands: Vec<usize> = (0..3).filter(|&i| quotas[i] - counts[i] as f64 > 1e-9).collect();
        let deficit = |i: usize| fractions[i] * seen as f64 - (allocated[i] + counts[i]) as f64;
        cands.sort_by(|&a, &b| deficit(b).total_cmp(&deficit(a)).then(a.cmp(&b)));
        for &i in &cands {
            if left == 0 {
                break;
            }
            counts[i] += 1;
            left -= 1;
        }
        // only reachable through floating-point slop
        counts[0] += left;
        for i in 0..3 {
            allocated[i] += counts[i];
        }
        out.push(counts);
    }
    out
}

fn warn_fallback(r: &SplitResult) {
    if r.distinct_value_strata {
        log::warn!(
            "{} bins exceed the distinct {} values; using one stratum per value",
            r.strategy.bins,
            r.strategy.variable
        );
    }
}

fn split_with_reference(
    pairs: &[FlatPair],
    strategy: StratificationStrategy,
    fractions: SplitFractions,
    reference: &Reference,
) -> SplitResult {
    let values: Vec<f64> = pairs.iter().map(|p| strategy.variable.value(&p.source_attrs)).collect();
    let (strata, fell_back) = quantile_strata(&values, strategy.bins);
    let n_strata = strata.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
    for (i, &s) in strata.iter().enumerate() {
        members[s].push(i);
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let counts = allocate(&sizes, fractions.as_array());
    let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
    let mut assign = vec![Split::Train; pairs.len()];
    for (group, c) in members.iter_mut().zip(&counts) {
        group.shuffle(&mut rng);
        for (pos, &i) in group.iter().enumerate() {
            assign[i] = if pos < c[0] {
                Split::Train
            } else if pos < c[0] + c[1] {
                Split::Dev
            } else {
                Split::Test
            };
        }
    }

    let mut ks_by_split: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for split in Split::ALL {
        let idx: Vec<usize> = (0..pairs.len()).filter(|&i| assign[i] == split).collect();
        if idx.is_empty() {
            continue;
        }
        let row = ks_by_split.entry(split.name().to_string()).or_default();
        for (k, kind) in AttributeKind::ALL.iter().enumerate() {
            let sub = control_sorted(idx.iter().map(|&i| pairs[i].control_value(*kind)));
            row.insert(kind.name().to_string(), ks_statistic_sorted(&sub, &reference.sorted[k]));
        }
    }
    let mut ks_per_attribute = BTreeMap::new();
    for kind in AttributeKind::ALL {
        let vals: Vec<f64> = [Split::Dev, Split::Test]
            .iter()
            .filter_map(|s| ks_by_split.get(s.name()))
            .map(|m| m[kind.name()])
            .collect();
        if !vals.is_empty() {
            ks_per_attribute.insert(kind.name().to_string(), vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }

    SplitResult {
        assignments: pairs.iter().zip(&assign).map(|(p, s)| (p.pair_id.clone(), *s)).collect(),
        ks_per_attribute,
        ks_by_split,
        strategy,
        distinct_value_strata: fell_back,
    }
}

/// Splits `pairs` into train/dev/test within equal-frequency strata of the
/// strategy's source variable.
pub fn stratified_split(
    pairs: &[FlatPair],
    strategy: StratificationStrategy,
    fractions: SplitFractions,
) -> Result<SplitResult, PartitionError> {
    fractions.validate()?;
    if strategy.bins == 0 {
        return Err(PartitionError::InvalidBins);
    }
    check_input(pairs)?;
    let r = split_with_reference(pairs, strategy, fractions, &Reference::new(pairs));
    warn_fallback(&r);
    Ok(r)
}

/// Grid for [`select_strategy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySearch {
    pub variables: Vec<StratVariable>,
    pub bins: Vec<usize>,
    pub seeds: Vec<u64>,
    pub fractions: SplitFractions,
}

impl Default for StrategySearch {
    fn default() -> Self {
        Self {
            variables: StratVariable::ALL.to_vec(),
            bins: vec![5, 10, 20],
            seeds: crate::seeds::PARTITIONING.to_vec(),
            fractions: SplitFractions::default(),
        }
    }
}

/// One KS value of the exported score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub variable: StratVariable,
    pub bins: usize,
    pub seed: u64,
    pub attribute: String,
    pub split: String,
    pub ks: f64,
}

/// A `(variable, bins)` cell with its objective averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyScore {
    pub variable: StratVariable,
    pub bins: usize,
    pub mean_ks: f64,
    /// Seed with the lowest objective inside this cell.
    pub best_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub best: SplitResult,
    /// In grid order: variables outermost, then bins.
    pub scores: Vec<StrategyScore>,
    pub table: Vec<ScoreRow>,
}

/// Runs [`stratified_split`] for every `(variable, bins, seed)` and keeps
/// the split of the `(variable, bins)` cell with the lowest seed-averaged
/// objective, using that cell's best seed. Ties keep the earliest cell.
pub fn select_strategy(pairs: &[FlatPair], search: &StrategySearch) -> Result<StrategyOutcome, PartitionError> {
    if search.variables.is_empty() || search.bins.is_empty() || search.seeds.is_empty() {
        return Err(PartitionError::EmptyGrid);
    }
    if search.bins.contains(&0) {
        return Err(PartitionError::InvalidBins);
    }
    search.fractions.validate()?;
    check_input(pairs)?;
    let reference = Reference::new(pairs);

    let mut grid = Vec::new();
    for &variable in &search.variables {
        for &bins in &search.bins {
            for &seed in &search.seeds {
                grid.push(StratificationStrategy { variable, bins, seed });
            }
        }
    }
    let results: Vec<SplitResult> = grid
        .par_iter()
        .map(|&s| split_with_reference(pairs, s, search.fractions, &reference))
        .collect();

    let mut table = Vec::new();
    for r in &results {
        for split in [Split::Dev, Split::Test] {
            if let Some(m) = r.ks_by_split.get(split.name()) {
                for (attr, ks) in m {
                    table.push(ScoreRow {
                        variable: r.strategy.variable,
                        bins: r.strategy.bins,
                        seed: r.strategy.seed,
                        attribute: attr.clone(),
                        split: split.name().to_string(),
                        ks: *ks,
                    });
                }
            }
        }
    }

    let per_cell = search.seeds.len();
    let mut scores = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for (c, chunk) in results.chunks(per_cell).enumerate() {
        warn_fallback(&chunk[0]);
        let objs: Vec<f64> = chunk.iter().map(SplitResult::score).collect();
        let mean = objs.iter().sum::<f64>() / objs.len() as f64;
        let (best_k, _) = objs
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        scores.push(StrategyScore {
            variable: chunk[0].strategy.variable,
            bins: chunk[0].strategy.bins,
            mean_ks: mean,
            best_seed: chunk[best_k].strategy.seed,
        });
        if best.is_none_or(|(b, _)| mean < b) {
            best = Some((mean, c * per_cell + best_k));
        }
    }
    let (_, idx) = best.expect("grid is non-empty");
    let winner = &results[idx];
    log::info!(
        "selected {} with {} bins (seed {}), mean KS {:.4}",
        winner.strategy.variable,
        winner.strategy.bins,
        winner.strategy.seed,
        scores[idx / per_cell].mean_ks
    );
    Ok(StrategyOutcome {
        best: results[idx].clone(),
        scores,
        table,
    })
}

/// CSV with columns `variable,bins,seed,attribute,split,ks`.
pub fn write_score_table_csv<W: Write>(rows: &[ScoreRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "bins", "seed", "attribute", "split", "ks"])?;
    for r in rows {
        w.write_record([
            r.variable.name().to_string(),
            r.bins.to_string(),
            r.seed.to_string(),
            r.attribute.clone(),
            r.split.clone(),
            r.ks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

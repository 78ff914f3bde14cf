use std::collections::BTreeMap;

/// Assigns each value to an equal-frequency bin.
///
/// Upper edge `k` (1-based) is the `ceil(k * n / bins)`-th smallest value;
/// duplicate edges collapse, and a value's stratum is the number of edges
/// strictly below it, so ties at a boundary stay in the lower bin. When
/// `bins` exceeds the number of distinct values each distinct value gets its
/// own stratum instead. Returns `(stratum per value, fell_back)`.
pub(crate) fn quantile_strata(values: &[f64], bins: usize) -> (Vec<usize>, bool) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| a == b);
    let distinct = sorted.len();
    if bins > distinct {
        let index: BTreeMap<u64, usize> = sorted.iter().enumerate().map(|(i, v)| (key(*v), i)).collect();
        return (values.iter().map(|v| index[&key(*v)]).collect(), true);
    }
    let mut all = values.to_vec();
    all.sort_by(f64::total_cmp);
    let n = all.len();
    let mut edges: Vec<f64> = (1..bins).map(|k| all[(k * n).div_ceil(bins) - 1]).collect();
    edges.dedup();
    let strata = values.iter().map(|v| edges.partition_point(|e| e < v)).collect();
    (strata, false)
}

fn key(v: f64) -> u64 {
    // -0.0 and 0.0 must share a stratum
    (v + 0.0).to_bits()
}

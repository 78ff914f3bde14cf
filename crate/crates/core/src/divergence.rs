//! One-dimensional distribution distances: two-sample Kolmogorov-Smirnov
//! statistic, Jensen-Shannon divergence over shared-edge histograms and
//! Earth Mover's (Wasserstein-1) distance.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DivergenceError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("histograms have different bin edges")]
    EdgeMismatch,
    #[error("bin count must be at least 1")]
    InvalidBins,
    #[error("invalid histogram range [{0}, {1}]")]
    InvalidRange(f64, f64),
}

/// Default bin count for histogram-based divergences.
pub const DEFAULT_BINS: usize = 20;

pub(crate) fn sorted_checked(values: &[f64]) -> Result<Vec<f64>, DivergenceError> {
    if values.is_empty() {
        return Err(DivergenceError::EmptySample);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DivergenceError::NonFinite);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample KS statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, DivergenceError> {
    Ok(ks_statistic_sorted(&sorted_checked(a)?, &sorted_checked(b)?))
}

/// [`ks_statistic`] for inputs that are already sorted, finite and non-empty.
pub fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Wasserstein-1 distance as the area between the two empirical CDFs.
///
/// Works for unequal sample sizes; for equal sizes it coincides with the
/// mean gap between sorted values.
pub fn emd(a: &[f64], b: &[f64]) -> Result<f64, DivergenceError> {
    Ok(emd_sorted(&sorted_checked(a)?, &sorted_checked(b)?))
}

/// [`emd`] for inputs that are already sorted, finite and non-empty.
pub fn emd_sorted(a: &[f64], b: &[f64]) -> f64 {
    let mut points: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut area = 0.0;
    for w in points.windows(2) {
        while i < a.len() && a[i] <= w[0] {
            i += 1;
        }
        while j < b.len() && b[j] <= w[0] {
            j += 1;
        }
        area += (i as f64 / n - j as f64 / m).abs() * (w[1] - w[0]);
    }
    area
}

/// Normalized histogram with explicit bin edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    /// `(lo, hi, mass)` per bin.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.masses)
            .map(|(e, &m)| (e[0], e[1], m))
    }

    /// Writes `bin_lo,bin_hi,mass` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_lo", "bin_hi", "mass"])?;
        for (lo, hi, m) in self.rows() {
            w.write_record([lo.to_string(), hi.to_string(), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bins `sample` into `bins` equal-width bins over `range` (or the sample's
/// own min/max). A degenerate range is widened by 0.5 on each side. Values
/// outside an explicit range are clamped into the end bins, and the last
/// bin includes its right edge.
pub fn histogram(sample: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Histogram, DivergenceError> {
    if bins == 0 {
        return Err(DivergenceError::InvalidBins);
    }
    let sorted = sorted_checked(sample)?;
    let (mut lo, mut hi) = match range {
        Some((lo, hi)) => {
            if lo >= hi || !lo.is_finite() || !hi.is_finite() {
                return Err(DivergenceError::InvalidRange(lo, hi));
            }
            (lo, hi)
        }
        None => (sorted[0], sorted[sorted.len() - 1]),
    };
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0usize; bins];
    for &v in &sorted {
        let k = ((v - lo) / width).floor();
        let k = if k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
        counts[k] += 1;
    }
    let n = sorted.len() as f64;
    Ok(Histogram {
        edges,
        masses: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).log2())
        .sum()
}

/// Base-2 Jensen-Shannon divergence, bounded in `[0, 1]`.
pub fn jsd(p: &Histogram, q: &Histogram) -> Result<f64, DivergenceError> {
    if p.edges != q.edges || p.masses.len() != q.masses.len() {
        return Err(DivergenceError::EdgeMismatch);
    }
    let m: Vec<f64> = p.masses.iter().zip(&q.masses).map(|(a, b)| 0.5 * (a + b)).collect();
    let d = 0.5 * kl_to_mixture(&p.masses, &m) + 0.5 * kl_to_mixture(&q.masses, &m);
    Ok(d.clamp(0.0, 1.0))
}

/// JSD of two raw samples binned on the range of `reference`.
pub fn jsd_samples(sample: &[f64], reference: &[f64], bins: usize) -> Result<f64, DivergenceError> {
    let r = sorted_checked(reference)?;
    let s = sorted_checked(sample)?;
    let lo = r[0].min(s[0]);
    let hi = r[r.len() - 1].max(s[s.len() - 1]);
    let range = if lo < hi { Some((lo, hi)) } else { None };
    let hr = histogram(&r, bins, range)?;
    let hs = histogram(&s, bins, Some((hr.edges[0], hr.edges[bins])))?;
    jsd(&hs, &hr)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && values[idx[end + 1]].total_cmp(&values[idx[start]]) == Ordering::Equal {
            end += 1;
        }
        let rank = (start + end) as f64 / 2.0 + 1.0;
        for &k in &idx[start..=end] {
            ranks[k] = rank;
        }
        start = end + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. Returns `None`
/// for fewer than two points or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0; 3], &[1.0; 3]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1., 2., 3., 4.], &[3., 4., 5., 6.]).unwrap(), 0.5);
        assert_eq!(ks_statistic(&[], &[1.0]), Err(DivergenceError::EmptySample));
        assert_eq!(ks_statistic(&[f64::NAN], &[1.0]), Err(DivergenceError::NonFinite));
    }

    #[test]
    fn emd_examples() {
        assert_eq!(emd(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(emd(&[3.0, 1.0], &[1.0, 3.0]).unwrap(), 0.0);
        // unequal sizes: {0} vs {0, 2} -> F gap of 1/2 over [0, 2]
        assert!((emd(&[0.0], &[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        let a = [0.5, 1.5, 4.0];
        let shifted: Vec<f64> = a.iter().map(|v| v - 2.25).collect();
        assert!((emd(&a, &shifted).unwrap() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(histogram(&[1.0, 1.0, 1.0], 1, None).unwrap().masses, vec![1.0]);
        let h = histogram(&[0., 1., 2., 3.], 2, Some((0.0, 4.0))).unwrap();
        assert_eq!(h.masses, vec![0.5, 0.5]);
        assert_eq!(h.edges, vec![0.0, 2.0, 4.0]);
        let h = histogram(&[5.0], 3, None).unwrap();
        assert_eq!(h.edges.first(), Some(&4.5));
        assert_eq!(h.edges.last(), Some(&5.5));
        assert_eq!(h.masses.iter().filter(|&&m| m > 0.0).count(), 1);
        // right edge inclusive
        assert_eq!(histogram(&[0.0, 4.0], 2, Some((0.0, 4.0))).unwrap().masses, vec![0.5, 0.5]);
        assert_eq!(histogram(&[1.0], 0, None), Err(DivergenceError::InvalidBins));
        assert!(histogram(&[1.0], 2, Some((2.0, 2.0))).is_err());
    }

    #[test]
    fn jsd_examples() {
        let e = vec![0.0, 1.0, 2.0];
        let h = |m: [f64; 2]| Histogram { edges: e.clone(), masses: m.to_vec() };
        assert_eq!(jsd(&h([0.3, 0.7]), &h([0.3, 0.7])).unwrap(), 0.0);
        assert!((jsd(&h([1.0, 0.0]), &h([0.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!((jsd(&h([1.0, 0.0]), &h([0.5, 0.5])).unwrap() - 0.3113).abs() < 1e-3);
        let other = Histogram { edges: vec![0.0, 1.0, 3.0], masses: vec![0.5, 0.5] };
        assert_eq!(jsd(&h([0.5, 0.5]), &other), Err(DivergenceError::EdgeMismatch));
    }

    #[test]
    fn histogram_csv() {
        let mut buf = Vec::new();
        histogram(&[0., 1., 2., 3.], 2, Some((0.0, 4.0))).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bin_lo,bin_hi,mass\n0,2,0.5\n2,4,0.5\n");
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1., 2., 3.], &[3., 2., 1.]), Some(-1.0));
        assert_eq!(spearman(&[1., 2., 3.], &[10., 20., 25.]), Some(1.0));
        assert_eq!(spearman(&[1., 1.], &[1., 2.]), None);
        assert!((spearman(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap() - 0.8).abs() < 1e-12);
    }
}

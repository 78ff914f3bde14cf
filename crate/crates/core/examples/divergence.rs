//! Distribution distances between two samples, plus the histograms behind JSD.

use ctrlsimp::divergence::{emd, histogram, jsd, ks_statistic, spearman};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let full: Vec<f64> = (0..5_000).map(|_| rng.random_range(0.0..12.0)).collect();
    // a sample that under-represents the upper half
    let skewed: Vec<f64> = full.iter().copied().filter(|&v| v < 6.0 || rng.random_bool(0.3)).take(500).collect();
    let fair: Vec<f64> = full.iter().copied().step_by(10).collect();

    for (name, sample) in [("every 10th", &fair), ("skewed", &skewed)] {
        let range = Some((0.0, 12.0));
        let p = histogram(sample, 12, range).unwrap();
        let q = histogram(&full, 12, range).unwrap();
        println!(
            "{name:<10}  KS {:.4}  EMD {:.4}  JSD {:.4}",
            ks_statistic(sample, &full).unwrap(),
            emd(sample, &full).unwrap(),
            jsd(&p, &q).unwrap()
        );
    }

    println!("\nskewed sample histogram:");
    let h = histogram(&skewed, 6, Some((0.0, 12.0))).unwrap();
    for (lo, hi, mass) in h.rows() {
        println!("[{lo:>4.1}, {hi:>4.1})  {:<40} {mass:.3}", "#".repeat((mass * 100.0) as usize));
    }

    let sizes = [100.0, 200.0, 400.0, 800.0];
    let ks: Vec<f64> = sizes
        .iter()
        .map(|&n| ks_statistic(&full[..n as usize], &full).unwrap())
        .collect();
    println!("\nKS of growing prefixes {ks:.4?}, Spearman vs size {:.2}", spearman(&sizes, &ks).unwrap());
}

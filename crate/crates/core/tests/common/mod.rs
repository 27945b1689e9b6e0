#![allow(dead_code)]

use amsc_core::fusion::{build_matrix, DistributionMatrix};
use amsc_core::DiagnosticDistribution;
use rand::Rng;

pub fn labels(n_d: usize) -> Vec<String> {
    (0..n_d).map(|i| format!("d{i}")).collect()
}

pub fn matrix(rows: &[Vec<f64>]) -> DistributionMatrix {
    let l = labels(rows[0].len());
    let dists: Vec<_> = rows
        .iter()
        .map(|r| DiagnosticDistribution::new(l.clone(), r.clone()))
        .collect();
    build_matrix(&dists).unwrap()
}

/// Strictly positive rows normalized to sum to one.
pub fn random_rows<R: Rng>(rng: &mut R, n_a: usize, n_d: usize) -> Vec<Vec<f64>> {
    (0..n_a)
        .map(|_| {
            let raw: Vec<f64> = (0..n_d).map(|_| rng.gen_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Rows on a grid of eighths, so ties between columns are common and sums are exact.
pub fn grid_rows<R: Rng>(rng: &mut R, n_a: usize, n_d: usize) -> Vec<Vec<f64>> {
    (0..n_a)
        .map(|_| {
            let mut units = vec![0u32; n_d];
            for _ in 0..8 {
                units[rng.gen_range(0..n_d)] += 1;
            }
            units.iter().map(|&u| u as f64 / 8.0).collect()
        })
        .collect()
}

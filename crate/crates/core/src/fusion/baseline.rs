//! Training-free fusion rules.

use super::linalg::pairwise_sum;
use super::matrix::DistributionMatrix;
use crate::backend::{argmax, DiagnosticDistribution};

/// Means closer than this are treated as tied in majority tie-breaking.
const MEAN_TIE_EPS: f64 = 1e-12;

/// Entrywise mean of the rows.
pub fn fuse_mean(matrix: &DistributionMatrix) -> DiagnosticDistribution {
    DiagnosticDistribution::new(matrix.labels().to_vec(), column_means(matrix))
}

fn column_means(matrix: &DistributionMatrix) -> Vec<f64> {
    let n = matrix.n_agents() as f64;
    (0..matrix.n_diseases())
        .map(|i| {
            let col: Vec<f64> = matrix.rows().iter().map(|r| r[i]).collect();
            pairwise_sum(&col) / n
        })
        .collect()
}

/// Plurality of per-row argmax votes. Ties go to the higher fused-mean
/// probability, then to the lowest index.
pub fn fuse_majority(matrix: &DistributionMatrix) -> usize {
    let mut votes = vec![0usize; matrix.n_diseases()];
    for r in matrix.rows() {
        votes[argmax(r)] += 1;
    }
    let top = *votes.iter().max().expect("non-empty");
    let tied: Vec<usize> = (0..votes.len()).filter(|&i| votes[i] == top).collect();
    if tied.len() == 1 {
        return tied[0];
    }
    let means = column_means(matrix);
    let mut best = tied[0];
    for &i in &tied[1..] {
        if means[i] > means[best] + MEAN_TIE_EPS {
            best = i;
        }
    }
    best
}

use serde::{Deserialize, Serialize};

use crate::backend::DiagnosticDistribution;
use crate::error::FusionError;

/// Per-specialist distributions for one patient, rows in panel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionMatrix {
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl DistributionMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_agents(&self) -> usize {
        self.rows.len()
    }

    pub fn n_diseases(&self) -> usize {
        self.labels.len()
    }

    /// Agent-major flattening: entry `a·n_d + i` is agent a's probability of disease i.
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.concat()
    }

    pub fn unflatten(labels: Vec<String>, flat: &[f64]) -> Result<Self, FusionError> {
        let n_d = labels.len();
        if n_d == 0 || !flat.len().is_multiple_of(n_d) {
            return Err(FusionError::Shape {
                expected_agents: flat.len() / n_d.max(1),
                expected_diseases: n_d,
                agents: 0,
                diseases: flat.len(),
            });
        }
        let rows = flat
            .chunks(n_d)
            .map(|c| DiagnosticDistribution::new(labels.clone(), c.to_vec()))
            .collect::<Vec<_>>();
        build_matrix(&rows)
    }
}

pub fn build_matrix(rows: &[DiagnosticDistribution]) -> Result<DistributionMatrix, FusionError> {
    let first = rows.first().ok_or(FusionError::EmptyMatrix)?;
    for (i, r) in rows.iter().enumerate() {
        if r.labels != first.labels {
            return Err(FusionError::LabelMismatch { row: i });
        }
        r.check().map_err(|detail| FusionError::InvalidRow { row: i, detail })?;
    }
    Ok(DistributionMatrix {
        labels: first.labels.clone(),
        rows: rows.iter().map(|r| r.probs.clone()).collect(),
    })
}

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::{symptom_view, Dataset, ViewMode};
use crate::error::EvalError;
use crate::specialist::Prediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub system: String,
    pub accuracy: f64,
    pub avg_turns: f64,
    pub train_seconds: f64,
    pub param_count: usize,
    pub per_disease_recall: BTreeMap<String, Option<f64>>,
    pub warnings: Vec<String>,
}

/// Per-record correctness in dataset record order (1.0 correct, 0.0 wrong).
pub fn correctness(predictions: &[Prediction], dataset: &Dataset) -> Result<Vec<f64>, EvalError> {
    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(predictions.len());
    let known: HashSet<&str> = dataset.records.iter().map(|r| r.id.as_str()).collect();
    for p in predictions {
        if !known.contains(p.record_id.as_str()) {
            return Err(EvalError::UnknownRecord(p.record_id.clone()));
        }
        if by_id.insert(p.record_id.as_str(), p.disease.as_str()).is_some() {
            return Err(EvalError::DuplicatePrediction(p.record_id.clone()));
        }
    }
    dataset
        .records
        .iter()
        .map(|r| {
            let pred = by_id
                .get(r.id.as_str())
                .ok_or_else(|| EvalError::MissingPrediction(r.id.clone()))?;
            Ok(if *pred == r.target { 1.0 } else { 0.0 })
        })
        .collect()
}

pub fn accuracy(predictions: &[Prediction], dataset: &Dataset) -> Result<f64, EvalError> {
    let c = correctness(predictions, dataset)?;
    if c.is_empty() {
        return Ok(0.0);
    }
    Ok(c.iter().sum::<f64>() / c.len() as f64)
}

/// Mean number of implicit findings a view consumes per record, standing in
/// for inquiry turns. Explicit-only systems ask nothing and score 0.
pub fn avg_turns(mode: ViewMode, dataset: &Dataset) -> f64 {
    if mode == ViewMode::ExplicitOnly || dataset.records.is_empty() {
        return 0.0;
    }
    let total: usize = dataset
        .records
        .iter()
        .map(|r| {
            let explicit = if mode == ViewMode::PositiveOnly {
                r.explicit.iter().filter(|a| a.polarity).count()
            } else {
                r.explicit.len()
            };
            symptom_view(r, mode).symptoms.len() - explicit
        })
        .sum();
    total as f64 / dataset.records.len() as f64
}

//! How much symptom vocabulary diseases share, and how often each symptom
//! shows up in each disease's records.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{symptom_view, Dataset, ViewMode};
use crate::error::DataError;
use crate::knowledge::KnowledgeProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapProfile {
    /// k -> fraction of the symptom universe named by exactly k profiles.
    pub shared_by_k: BTreeMap<usize, f64>,
    /// disease -> symptom -> fraction of that disease's records asserting the symptom as present.
    pub per_symptom_disease_rate: BTreeMap<String, BTreeMap<String, f64>>,
}

impl OverlapProfile {
    pub fn shared_by(&self, k: usize) -> f64 {
        self.shared_by_k.get(&k).copied().unwrap_or(0.0)
    }

    pub fn rate(&self, symptom: &str, disease: &str) -> Option<f64> {
        self.per_symptom_disease_rate.get(disease)?.get(symptom).copied()
    }
}

pub fn overlap_profile(profiles: &[KnowledgeProfile], dataset: &Dataset) -> Result<OverlapProfile, DataError> {
    if profiles.is_empty() {
        return Err(DataError::NoProfiles);
    }
    let mut holders: BTreeMap<&str, usize> = BTreeMap::new();
    for p in profiles {
        let unique: BTreeSet<&str> = p.symptoms.iter().map(String::as_str).collect();
        for s in unique {
            *holders.entry(s).or_default() += 1;
        }
    }
    let universe = holders.len();
    let mut counts = vec![0usize; profiles.len() + 1];
    for &k in holders.values() {
        counts[k] += 1;
    }
    let shared_by_k = (1..=profiles.len())
        .map(|k| (k, counts[k] as f64 / universe as f64))
        .collect();

    let mut by_disease: HashMap<&str, Vec<BTreeSet<String>>> = HashMap::new();
    for r in &dataset.records {
        let present = symptom_view(r, ViewMode::All)
            .present()
            .map(str::to_string)
            .collect();
        by_disease.entry(r.target.as_str()).or_default().push(present);
    }
    let mut per_symptom_disease_rate = BTreeMap::new();
    for p in profiles {
        let Some(records) = by_disease.get(p.disease.as_str()) else {
            continue;
        };
        let mut rates = BTreeMap::new();
        for s in holders.keys() {
            let hits = records.iter().filter(|set| set.contains(*s)).count();
            rates.insert(s.to_string(), hits as f64 / records.len() as f64);
        }
        per_symptom_disease_rate.insert(p.disease.clone(), rates);
    }
    Ok(OverlapProfile {
        shared_by_k,
        per_symptom_disease_rate,
    })
}

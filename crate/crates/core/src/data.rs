//! Consultation records, datasets and the symptom views the ablations use.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Lowercase, trim and collapse internal whitespace runs to a single space.
pub fn normalize_term(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One symptom as reported (or denied) by a patient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymptomAssertion {
    pub name: String,
    #[serde(rename = "present")]
    pub polarity: bool,
}

impl SymptomAssertion {
    pub fn new(name: &str, polarity: bool) -> Result<Self, DataError> {
        let name = normalize_term(name);
        if name.is_empty() {
            return Err(DataError::EmptySymptom);
        }
        Ok(Self { name, polarity })
    }

    pub fn present(name: &str) -> Self {
        Self::new(name, true).expect("non-empty symptom name")
    }

    pub fn denied(name: &str) -> Self {
        Self::new(name, false).expect("non-empty symptom name")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: String,
    pub explicit: Vec<SymptomAssertion>,
    pub implicit: Vec<SymptomAssertion>,
    pub target: String,
    pub complaint_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub diseases: Vec<String>,
    pub records: Vec<PatientRecord>,
}

impl Dataset {
    /// Builds a dataset, normalizing symptom names and enforcing invariants.
    pub fn new(
        name: impl Into<String>,
        diseases: Vec<String>,
        records: Vec<PatientRecord>,
    ) -> Result<Self, DataError> {
        let mut ds = Dataset {
            name: name.into(),
            diseases,
            records,
        };
        ds.normalize()?;
        ds.validate()?;
        Ok(ds)
    }

    fn normalize(&mut self) -> Result<(), DataError> {
        for rec in &mut self.records {
            for (field, list) in [("explicit", &mut rec.explicit), ("implicit", &mut rec.implicit)] {
                for a in list.iter_mut() {
                    a.name = normalize_term(&a.name);
                    if a.name.is_empty() {
                        return Err(DataError::Schema {
                            record: rec.id.clone(),
                            field: field.to_string(),
                            detail: "empty symptom name".into(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let mut seen = HashSet::new();
        for d in &self.diseases {
            if !seen.insert(d.as_str()) {
                return Err(DataError::DuplicateDisease(d.clone()));
            }
        }
        let mut ids = HashSet::new();
        for rec in &self.records {
            if !ids.insert(rec.id.as_str()) {
                return Err(DataError::Schema {
                    record: rec.id.clone(),
                    field: "id".into(),
                    detail: "duplicate record id".into(),
                });
            }
            for (field, list) in [("explicit", &rec.explicit), ("implicit", &rec.implicit)] {
                let mut names = HashSet::new();
                for a in list {
                    if !names.insert(a.name.as_str()) {
                        return Err(DataError::Schema {
                            record: rec.id.clone(),
                            field: field.to_string(),
                            detail: format!("duplicate symptom '{}'", a.name),
                        });
                    }
                }
            }
            if !seen.contains(rec.target.as_str()) {
                return Err(DataError::UnknownTarget {
                    record: rec.id.clone(),
                    target: rec.target.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn disease_index(&self, name: &str) -> Option<usize> {
        self.diseases.iter().position(|d| d == name)
    }

    /// Same vocabulary, different records.
    pub fn with_records(&self, name: impl Into<String>, records: Vec<PatientRecord>) -> Dataset {
        Dataset {
            name: name.into(),
            diseases: self.diseases.clone(),
            records,
        }
    }
}

/// Reads a dataset file, normalizing symptoms and checking every invariant.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| DataError::Schema {
        record: "<file>".into(),
        field: "<json>".into(),
        detail: e.to_string(),
    })?;
    parse_dataset_value(&raw)
}

fn parse_dataset_value(raw: &serde_json::Value) -> Result<Dataset, DataError> {
    // Deserialize record by record so schema errors can name the record.
    let schema = |record: &str, field: &str, detail: String| DataError::Schema {
        record: record.to_string(),
        field: field.to_string(),
        detail,
    };
    let obj = raw
        .as_object()
        .ok_or_else(|| schema("<file>", "<root>", "expected a JSON object".into()))?;
    let name = obj
        .get("name")
        .and_then(|v| v.as_str())
        .ok_or_else(|| schema("<file>", "name", "missing or not a string".into()))?;
    let diseases: Vec<String> = obj
        .get("diseases")
        .cloned()
        .ok_or_else(|| schema("<file>", "diseases", "missing".into()))
        .and_then(|v| {
            serde_json::from_value(v).map_err(|e| schema("<file>", "diseases", e.to_string()))
        })?;
    let records_raw = obj
        .get("records")
        .and_then(|v| v.as_array())
        .ok_or_else(|| schema("<file>", "records", "missing or not an array".into()))?;
    let mut records = Vec::with_capacity(records_raw.len());
    for (i, r) in records_raw.iter().enumerate() {
        let id = r
            .get("id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{i}"));
        for field in ["id", "explicit", "implicit", "target"] {
            if r.get(field).is_none() {
                return Err(schema(&id, field, "missing".into()));
            }
        }
        let rec: PatientRecord =
            serde_json::from_value(r.clone()).map_err(|e| schema(&id, "<record>", e.to_string()))?;
        records.push(rec);
    }
    Dataset::new(name, diseases, records)
}

/// Writes the canonical serialization: fixed key order, two-space indent, trailing newline.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    dataset.validate()?;
    let mut text = serde_json::to_string_pretty(dataset).expect("dataset serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewMode {
    ExplicitOnly,
    All,
    PositiveOnly,
}

impl ViewMode {
    /// Short name used in CLI configs and report rows.
    pub fn tag(self) -> &'static str {
        match self {
            ViewMode::ExplicitOnly => "explicit",
            ViewMode::All => "all",
            ViewMode::PositiveOnly => "pos",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymptomView {
    pub record_id: String,
    pub symptoms: Vec<SymptomAssertion>,
    pub mode: ViewMode,
}

impl SymptomView {
    pub fn present(&self) -> impl Iterator<Item = &str> {
        self.symptoms.iter().filter(|a| a.polarity).map(|a| a.name.as_str())
    }

    pub fn denied(&self) -> impl Iterator<Item = &str> {
        self.symptoms.iter().filter(|a| !a.polarity).map(|a| a.name.as_str())
    }
}

/// Projects a record onto the symptom subset seen by a given ablation.
///
/// `All` keeps explicit assertions first; an implicit assertion whose name
/// already appears explicitly is dropped.
pub fn symptom_view(record: &PatientRecord, mode: ViewMode) -> SymptomView {
    let mut symptoms = record.explicit.clone();
    if mode != ViewMode::ExplicitOnly {
        let seen: HashSet<&str> = record.explicit.iter().map(|a| a.name.as_str()).collect();
        symptoms.extend(
            record
                .implicit
                .iter()
                .filter(|a| !seen.contains(a.name.as_str()))
                .cloned(),
        );
    }
    if mode == ViewMode::PositiveOnly {
        symptoms.retain(|a| a.polarity);
    }
    SymptomView {
        record_id: record.id.clone(),
        symptoms,
        mode,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStatistics {
    pub records: usize,
    pub diseases: usize,
    pub mean_explicit: f64,
    pub mean_implicit: f64,
}

pub fn dataset_statistics(dataset: &Dataset) -> Result<DatasetStatistics, DataError> {
    let n = dataset.records.len();
    if n == 0 {
        return Err(DataError::EmptyDataset);
    }
    // Integer totals first, one division at the end.
    let explicit: usize = dataset.records.iter().map(|r| r.explicit.len()).sum();
    let implicit: usize = dataset.records.iter().map(|r| r.implicit.len()).sum();
    Ok(DatasetStatistics {
        records: n,
        diseases: dataset.diseases.len(),
        mean_explicit: explicit as f64 / n as f64,
        mean_implicit: implicit as f64 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Set when the split fell back to an unstratified shuffle.
    pub unstratified: bool,
}

/// Seeded train/test partition, stratified by target disease when every
/// disease has at least two records.
pub fn split_dataset(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<Split, DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::BadFraction(train_fraction));
    }
    let n = dataset.records.len();
    if n < 2 {
        return Err(DataError::TooFewRecords(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in dataset.records.iter().enumerate() {
        let d = dataset.disease_index(&r.target).expect("validated target");
        groups.entry(d).or_default().push(i);
    }
    let stratifiable = n >= dataset.diseases.len() && groups.values().all(|g| g.len() >= 2);

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    if stratifiable {
        for members in groups.values_mut() {
            members.shuffle(&mut rng);
            let k = take_count(members.len(), train_fraction);
            train_idx.extend_from_slice(&members[..k]);
            test_idx.extend_from_slice(&members[k..]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let k = take_count(n, train_fraction);
        train_idx.extend_from_slice(&all[..k]);
        test_idx.extend_from_slice(&all[k..]);
    }
    // Preserve original record order within each half.
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset.records[i].clone()).collect();
    Ok(Split {
        train: dataset.with_records(format!("{}/train", dataset.name), pick(&train_idx)),
        test: dataset.with_records(format!("{}/test", dataset.name), pick(&test_idx)),
        unstratified: !stratifiable,
    })
}

/// Rounded share for the training side, keeping at least one record on each side.
fn take_count(len: usize, fraction: f64) -> usize {
    let k = (len as f64 * fraction).round() as usize;
    k.clamp(1, len - 1)
}

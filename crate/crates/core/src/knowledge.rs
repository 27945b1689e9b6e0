//! Disease knowledge profiles: a disease plus its characteristic symptoms.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::normalize_term;
use crate::error::DataError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeProfile {
    pub disease: String,
    pub symptoms: Vec<String>,
}

impl KnowledgeProfile {
    pub fn new<S: AsRef<str>>(disease: impl Into<String>, symptoms: &[S]) -> Result<Self, DataError> {
        let mut p = KnowledgeProfile {
            disease: disease.into(),
            symptoms: symptoms.iter().map(|s| s.as_ref().to_string()).collect(),
        };
        p.normalize()?;
        Ok(p)
    }

    fn normalize(&mut self) -> Result<(), DataError> {
        let mut seen = HashSet::new();
        for s in &mut self.symptoms {
            *s = normalize_term(s);
            if s.is_empty() {
                return Err(DataError::Knowledge(self.disease.clone(), "empty symptom".into()));
            }
            if !seen.insert(s.clone()) {
                return Err(DataError::Knowledge(
                    self.disease.clone(),
                    format!("duplicate symptom '{s}'"),
                ));
            }
        }
        if self.symptoms.is_empty() {
            return Err(DataError::Knowledge(self.disease.clone(), "no symptoms".into()));
        }
        Ok(())
    }
}

pub fn load_knowledge(path: &Path) -> Result<Vec<KnowledgeProfile>, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut profiles: Vec<KnowledgeProfile> =
        serde_json::from_str(&text).map_err(|e| DataError::Schema {
            record: "<knowledge>".into(),
            field: "<json>".into(),
            detail: e.to_string(),
        })?;
    for p in &mut profiles {
        p.normalize()?;
    }
    Ok(profiles)
}

pub fn save_knowledge(profiles: &[KnowledgeProfile], path: &Path) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(profiles).expect("profiles serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

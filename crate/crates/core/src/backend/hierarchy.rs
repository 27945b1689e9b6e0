//! Two-stage MCQA over a category -> disease taxonomy, for option lists
//! too long for a single lettered prompt.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prompt::{build_prompt, QuestionSource};
use super::{option_distribution, DiagnosticDistribution, ScoreBackend};
use crate::error::BackendError;
use crate::knowledge::KnowledgeProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub diseases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub categories: Vec<Category>,
}

impl Taxonomy {
    pub fn validate(&self) -> Result<(), BackendError> {
        let mut leaves = HashSet::new();
        for c in &self.categories {
            if c.diseases.is_empty() {
                return Err(BackendError::Taxonomy(format!("category '{}' is empty", c.name)));
            }
            for d in &c.diseases {
                if !leaves.insert(d.as_str()) {
                    return Err(BackendError::Taxonomy(format!("disease '{d}' appears twice")));
                }
            }
        }
        if leaves.len() < 2 {
            return Err(BackendError::Taxonomy("need at least 2 diseases".into()));
        }
        Ok(())
    }

    /// Leaves in category order.
    pub fn leaves(&self) -> Vec<String> {
        self.categories.iter().flat_map(|c| c.diseases.iter().cloned()).collect()
    }
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy, BackendError> {
    let text = fs::read_to_string(path).map_err(|e| BackendError::Taxonomy(format!("{}: {e}", path.display())))?;
    let t: Taxonomy = serde_json::from_str(&text).map_err(|e| BackendError::Taxonomy(e.to_string()))?;
    t.validate()?;
    Ok(t)
}

/// p(disease) = p(category) · p(disease | category). Single-member stages
/// are point masses and skip the backend.
pub fn hierarchical_distribution(
    backend: &dyn ScoreBackend,
    source: QuestionSource<'_>,
    taxonomy: &Taxonomy,
    knowledge: Option<&KnowledgeProfile>,
    template_id: &str,
) -> Result<DiagnosticDistribution, BackendError> {
    taxonomy.validate()?;
    let stage = |labels: Vec<String>| -> Result<DiagnosticDistribution, BackendError> {
        if labels.len() == 1 {
            return Ok(DiagnosticDistribution::point_mass(labels, 0));
        }
        let prompt = build_prompt(source, &labels, knowledge, template_id)?;
        option_distribution(backend, &prompt)
    };
    let top = stage(taxonomy.categories.iter().map(|c| c.name.clone()).collect())?;
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut fallback = top.uniform_fallback;
    for (c, p_cat) in taxonomy.categories.iter().zip(&top.probs) {
        let inner = stage(c.diseases.clone())?;
        fallback |= inner.uniform_fallback;
        labels.extend(inner.labels);
        probs.extend(inner.probs.iter().map(|p| p_cat * p));
    }
    let mut d = DiagnosticDistribution::new(labels, probs);
    d.uniform_fallback = fallback;
    Ok(d)
}

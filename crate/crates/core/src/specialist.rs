//! Agent-derived specialists: one backend, many knowledge-conditioned views.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::prompt::{build_prompt, QuestionSource};
use crate::backend::{hierarchical_distribution, option_distribution, DiagnosticDistribution, ScoreBackend, Taxonomy};
use crate::data::Dataset;
use crate::error::SpecialistError;
pub use crate::knowledge::KnowledgeProfile;

pub const GP_ID: &str = "gp";

#[derive(Clone)]
pub struct Specialist {
    pub id: String,
    pub backend: Arc<dyn ScoreBackend>,
    /// `None` is the general practitioner.
    pub knowledge: Option<KnowledgeProfile>,
}

impl std::fmt::Debug for Specialist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Specialist")
            .field("id", &self.id)
            .field("backend", &self.backend.id())
            .field("knowledge", &self.knowledge)
            .finish()
    }
}

impl Specialist {
    pub fn general_practitioner(backend: Arc<dyn ScoreBackend>) -> Self {
        Specialist {
            id: GP_ID.into(),
            backend,
            knowledge: None,
        }
    }
}

/// How a prompt is phrased and, for long vocabularies, staged.
#[derive(Debug, Clone, Default)]
pub struct PromptPlan {
    pub template_id: String,
    pub taxonomy: Option<Taxonomy>,
}

impl PromptPlan {
    pub fn flat(template_id: &str) -> Self {
        PromptPlan {
            template_id: template_id.into(),
            taxonomy: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub specialists: Vec<Specialist>,
    pub diseases: Vec<String>,
}

/// One specialist per profile, in profile order. Every profile disease must
/// be an option.
pub fn make_panel(
    backend: Arc<dyn ScoreBackend>,
    profiles: &[KnowledgeProfile],
    diseases: &[String],
) -> Result<Panel, SpecialistError> {
    if let Some(p) = profiles.iter().find(|p| !diseases.contains(&p.disease)) {
        return Err(SpecialistError::ProfileNotInOptions(p.disease.clone()));
    }
    make_ablation_panel(backend, profiles, diseases)
}

/// Like [`make_panel`] but profiles may name diseases outside the options.
pub fn make_ablation_panel(
    backend: Arc<dyn ScoreBackend>,
    profiles: &[KnowledgeProfile],
    diseases: &[String],
) -> Result<Panel, SpecialistError> {
    if profiles.is_empty() {
        return Err(SpecialistError::EmptyPanel);
    }
    let mut seen = HashSet::new();
    for p in profiles {
        if !seen.insert(p.disease.as_str()) {
            return Err(SpecialistError::DuplicateProfile(p.disease.clone()));
        }
    }
    let specialists = profiles
        .iter()
        .map(|p| Specialist {
            id: format!("specialist:{}", p.disease),
            backend: backend.clone(),
            knowledge: Some(p.clone()),
        })
        .collect();
    Ok(Panel {
        specialists,
        diseases: diseases.to_vec(),
    })
}

pub fn specialist_distribution(
    specialist: &Specialist,
    source: QuestionSource<'_>,
    diseases: &[String],
    plan: &PromptPlan,
) -> Result<DiagnosticDistribution, SpecialistError> {
    let knowledge = specialist.knowledge.as_ref();
    let dist = match &plan.taxonomy {
        Some(t) => hierarchical_distribution(specialist.backend.as_ref(), source, t, knowledge, &plan.template_id)?,
        None => {
            let prompt = build_prompt(source, diseases, knowledge, &plan.template_id)?;
            option_distribution(specialist.backend.as_ref(), &prompt)?
        }
    };
    Ok(dist)
}

impl Panel {
    /// Row-ordered distributions for every question, computed with at most
    /// the backend's `max_in_flight` concurrent calls. Output order follows
    /// input order.
    pub fn distributions(
        &self,
        sources: &[QuestionSource<'_>],
        plan: &PromptPlan,
    ) -> Result<Vec<Vec<DiagnosticDistribution>>, SpecialistError> {
        let width = self
            .specialists
            .first()
            .map(|s| s.backend.max_in_flight())
            .unwrap_or(1)
            .max(1);
        run_bounded(width, || {
            sources
                .par_iter()
                .map(|src| {
                    self.specialists
                        .iter()
                        .map(|s| specialist_distribution(s, *src, &self.diseases, plan))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect()
        })
    }
}

/// Distributions of one specialist over many questions, bounded like [`Panel::distributions`].
pub fn distributions_for(
    specialist: &Specialist,
    sources: &[QuestionSource<'_>],
    diseases: &[String],
    plan: &PromptPlan,
) -> Result<Vec<DiagnosticDistribution>, SpecialistError> {
    run_bounded(specialist.backend.max_in_flight().max(1), || {
        sources
            .par_iter()
            .map(|src| specialist_distribution(specialist, *src, diseases, plan))
            .collect()
    })
}

fn run_bounded<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Pairs disease i with the symptom list of profile `permutation[i]`.
/// The permutation must move every index.
pub fn reorder_knowledge(
    profiles: &[KnowledgeProfile],
    permutation: &[usize],
) -> Result<Vec<KnowledgeProfile>, SpecialistError> {
    let n = profiles.len();
    if permutation.len() != n {
        return Err(SpecialistError::Permutation(format!(
            "length {} for {n} profiles",
            permutation.len()
        )));
    }
    let mut seen = vec![false; n];
    for (i, &p) in permutation.iter().enumerate() {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(SpecialistError::Permutation(format!("{permutation:?} is not a permutation of 0..{n}")));
        }
        if p == i {
            return Err(SpecialistError::Permutation(format!("index {i} is a fixed point")));
        }
    }
    Ok(permutation
        .iter()
        .enumerate()
        .map(|(i, &src)| KnowledgeProfile {
            disease: profiles[i].disease.clone(),
            symptoms: profiles[src].symptoms.clone(),
        })
        .collect())
}

/// Cyclic shift by one: the simplest derangement for n >= 2.
pub fn default_derangement(n: usize) -> Vec<usize> {
    (0..n).map(|i| (i + 1) % n).collect()
}

/// First `diseases.len()` pool profiles, in pool order.
pub fn irrelevant_knowledge(
    diseases: &[String],
    pool: &[KnowledgeProfile],
) -> Result<Vec<KnowledgeProfile>, SpecialistError> {
    if let Some(p) = pool.iter().find(|p| diseases.contains(&p.disease)) {
        return Err(SpecialistError::PoolOverlap(p.disease.clone()));
    }
    if pool.len() < diseases.len() {
        return Err(SpecialistError::PoolTooSmall {
            pool: pool.len(),
            needed: diseases.len(),
        });
    }
    Ok(pool[..diseases.len()].to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub record_id: String,
    pub disease: String,
}

/// Recall per disease; `None` marks diseases with no records.
pub fn per_disease_recall(
    predictions: &[Prediction],
    dataset: &Dataset,
) -> Result<BTreeMap<String, Option<f64>>, SpecialistError> {
    let targets: HashMap<&str, &str> = dataset
        .records
        .iter()
        .map(|r| (r.id.as_str(), r.target.as_str()))
        .collect();
    let mut seen = HashSet::new();
    let mut hits: HashMap<&str, (usize, usize)> = HashMap::new();
    for p in predictions {
        let target = *targets
            .get(p.record_id.as_str())
            .ok_or_else(|| SpecialistError::UnknownRecord(p.record_id.clone()))?;
        if !seen.insert(p.record_id.as_str()) {
            return Err(SpecialistError::DuplicatePrediction(p.record_id.clone()));
        }
        let e = hits.entry(target).or_default();
        e.1 += 1;
        if p.disease == target {
            e.0 += 1;
        }
    }
    Ok(dataset
        .diseases
        .iter()
        .map(|d| {
            let r = hits
                .get(d.as_str())
                .map(|&(correct, total)| correct as f64 / total as f64);
            (d.clone(), r)
        })
        .collect())
}

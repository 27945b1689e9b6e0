//! Seeded synthetic consultation data with a tunable symptom-overlap knob.
//!
//! Each disease gets a profile of [`SYMPTOMS_PER_PROFILE`] symptoms. A
//! `redundancy` share of them come from one pool common to every disease;
//! the rest are unique to the disease. Records carry two or three explicit
//! symptoms of their target, plus implicit follow-up findings: more true
//! symptoms and some denied symptoms belonging to other diseases.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PatientRecord, SymptomAssertion};
use crate::error::DataError;
use crate::knowledge::KnowledgeProfile;

pub const SYMPTOMS_PER_PROFILE: usize = 8;

/// Probability that a record carries three explicit symptoms instead of two.
const THREE_EXPLICIT_RATE: f64 = 0.36;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub n_diseases: usize,
    pub records_per_disease: usize,
    pub redundancy: f64,
    pub seed: u64,
    /// Implicit findings are drawn from symptoms no disease profile mentions,
    /// so expanding the view to implicit symptoms adds no diagnostic signal.
    #[serde(default)]
    pub uninformative_implicit: bool,
}

impl FixtureSpec {
    pub fn new(n_diseases: usize, records_per_disease: usize, redundancy: f64, seed: u64) -> Self {
        FixtureSpec {
            n_diseases,
            records_per_disease,
            redundancy,
            seed,
            uninformative_implicit: false,
        }
    }
}

pub fn synthesize_fixture(
    n_diseases: usize,
    records_per_disease: usize,
    redundancy: f64,
    seed: u64,
) -> Result<(Dataset, Vec<KnowledgeProfile>), DataError> {
    synthesize(&FixtureSpec::new(n_diseases, records_per_disease, redundancy, seed))
}

pub fn synthesize(spec: &FixtureSpec) -> Result<(Dataset, Vec<KnowledgeProfile>), DataError> {
    if spec.n_diseases < 2 {
        return Err(DataError::FixtureParam(format!("n_diseases = {} (need >= 2)", spec.n_diseases)));
    }
    if spec.records_per_disease < 1 {
        return Err(DataError::FixtureParam("records_per_disease = 0".into()));
    }
    if !(0.0..=1.0).contains(&spec.redundancy) {
        return Err(DataError::FixtureParam(format!("redundancy = {}", spec.redundancy)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_shared = (spec.redundancy * SYMPTOMS_PER_PROFILE as f64).round() as usize;
    let n_unique = SYMPTOMS_PER_PROFILE - n_shared;

    let diseases: Vec<String> = (0..spec.n_diseases).map(|i| format!("d_{i}")).collect();
    let shared: Vec<String> = (0..n_shared).map(|j| format!("common sign {j}")).collect();
    let profiles: Vec<KnowledgeProfile> = diseases
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut symptoms = shared.clone();
            symptoms.extend((0..n_unique).map(|j| format!("sign {i}-{j}")));
            symptoms.shuffle(&mut rng);
            KnowledgeProfile {
                disease: d.clone(),
                symptoms,
            }
        })
        .collect();

    let unrelated: Vec<String> = (0..12).map(|j| format!("unrelated sign {j}")).collect();

    let mut records = Vec::with_capacity(spec.n_diseases * spec.records_per_disease);
    for (di, profile) in profiles.iter().enumerate() {
        // Denied distractors: symptoms of the profile universe this disease lacks.
        let foreign: Vec<&String> = profiles
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != di)
            .flat_map(|(_, p)| p.symptoms.iter())
            .filter(|s| !profile.symptoms.contains(s))
            .collect();
        for k in 0..spec.records_per_disease {
            let n_explicit = if rng.gen_bool(THREE_EXPLICIT_RATE) { 3 } else { 2 };
            let picks = index::sample(&mut rng, profile.symptoms.len(), profile.symptoms.len());
            let order: Vec<&String> = picks.iter().map(|i| &profile.symptoms[i]).collect();
            let explicit: Vec<SymptomAssertion> = order[..n_explicit]
                .iter()
                .map(|s| SymptomAssertion::present(s))
                .collect();

            let mut implicit = Vec::new();
            if spec.uninformative_implicit {
                let n_pos = rng.gen_range(1..=3);
                let n_neg = rng.gen_range(1..=2);
                let picks = index::sample(&mut rng, unrelated.len(), n_pos + n_neg);
                for (t, i) in picks.iter().enumerate() {
                    implicit.push(SymptomAssertion::new(&unrelated[i], t < n_pos)?);
                }
            } else {
                let n_pos = rng.gen_range(1..=3).min(order.len() - n_explicit);
                implicit.extend(
                    order[n_explicit..n_explicit + n_pos]
                        .iter()
                        .map(|s| SymptomAssertion::present(s)),
                );
                let pool: Vec<&String> = if foreign.is_empty() {
                    unrelated.iter().collect()
                } else {
                    foreign.clone()
                };
                let n_neg = rng.gen_range(1..=2).min(pool.len());
                for i in index::sample(&mut rng, pool.len(), n_neg).iter() {
                    implicit.push(SymptomAssertion::denied(pool[i]));
                }
            }

            let complaint = complaint_text(&explicit);
            records.push(PatientRecord {
                id: format!("{}-{k:04}", profile.disease),
                explicit,
                implicit,
                target: profile.disease.clone(),
                complaint_text: Some(complaint),
            });
        }
    }
    let name = format!(
        "fixture-n{}-r{}-red{}-s{}",
        spec.n_diseases, spec.records_per_disease, spec.redundancy, spec.seed
    );
    Ok((Dataset::new(name, diseases, records)?, profiles))
}

/// Profiles for `n` diseases outside any fixture vocabulary, with symptoms no
/// fixture record mentions. Used as an irrelevant-knowledge pool.
pub fn unrelated_profiles(n: usize) -> Vec<KnowledgeProfile> {
    (0..n)
        .map(|i| KnowledgeProfile {
            disease: format!("u_{i}"),
            symptoms: (0..SYMPTOMS_PER_PROFILE).map(|j| format!("remote sign {i}-{j}")).collect(),
        })
        .collect()
}

fn complaint_text(explicit: &[SymptomAssertion]) -> String {
    let names: Vec<&str> = explicit.iter().map(|a| a.name.as_str()).collect();
    match names.split_last() {
        Some((last, [])) => format!("For a few days I have had {last}."),
        Some((last, rest)) => format!("For a few days I have had {} and {last}.", rest.join(", ")),
        None => "I feel unwell.".into(),
    }
}

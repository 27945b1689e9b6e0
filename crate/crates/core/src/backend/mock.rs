//! Deterministic stand-in for an LLM scorer.
//!
//! The mock reads the rendered prompt back (present and denied symptoms, and
//! an optional specialist preamble) and scores each option label with
//!
//! ```text
//! score(o) = exp(α·|K_o ∩ S⁺| − β·|K_o ∩ S⁻| + γ·[preamble names o]
//!                + position_bias·bias(pos(o)) + ε(seed, content, o))
//! ```
//!
//! `K_o` is the symptom set the mock associates with label `o`. Without a
//! preamble it only knows a seeded [`MOCK_GENERAL_COVERAGE`] share of each
//! registered profile. A preamble naming `o` adds the listed symptoms to
//! `K_o`, each counted with weight `trust` = the share of the mock's prior
//! symptoms for `o` that the preamble also lists. Matched knowledge has
//! trust 1, so a specialist sees its own disease completely; a preamble
//! listing another disease's symptoms is only partly believed. The noise
//! term depends on the prompt content and the label, never on option
//! position.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::prompt::{
    McqaPrompt, COMPLAINT_PREFIX, DENIED_PREFIX, PREAMBLE_PREFIX, PREAMBLE_SYMPTOMS, PRESENT_PREFIX,
};
use super::{BackendConfig, OptionScores, ScoreBackend};
use crate::error::BackendError;
use crate::knowledge::KnowledgeProfile;

pub const MOCK_ALPHA: f64 = 1.0;
pub const MOCK_BETA: f64 = 0.5;
pub const MOCK_GAMMA: f64 = 0.75;
/// Standard deviation of the per-(content, label) exponent noise.
pub const MOCK_NOISE: f64 = 0.5;
/// Share of each profile's symptoms the mock knows without a preamble.
pub const MOCK_GENERAL_COVERAGE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    position_bias: f64,
    max_in_flight: usize,
    /// label -> symptoms known without a preamble
    general: BTreeMap<String, BTreeSet<String>>,
    /// every symptom term the mock can recognize in free text
    vocabulary: BTreeSet<String>,
}

#[derive(Debug, Default, PartialEq)]
pub(crate) struct ParsedPrompt {
    pub specialty: Option<(String, Vec<String>)>,
    pub present: Vec<String>,
    pub denied: Vec<String>,
    pub complaint: Option<String>,
}

fn split_list(s: &str) -> Vec<String> {
    let s = s.trim().trim_end_matches('.');
    if s.is_empty() || s == "none" {
        return Vec::new();
    }
    s.split(", ").map(|x| x.trim().to_string()).collect()
}

pub(crate) fn parse_prompt(prompt: &McqaPrompt) -> ParsedPrompt {
    let mut out = ParsedPrompt::default();
    if let Some(pre) = prompt.preamble.as_deref().and_then(|p| p.strip_prefix(PREAMBLE_PREFIX)) {
        if let Some((disease, symptoms)) = pre.split_once(PREAMBLE_SYMPTOMS) {
            out.specialty = Some((disease.to_string(), split_list(symptoms)));
        }
    }
    for line in prompt.question.lines() {
        if let Some(rest) = line.strip_prefix(PRESENT_PREFIX) {
            out.present = split_list(rest);
        } else if let Some(rest) = line.strip_prefix(DENIED_PREFIX) {
            out.denied = split_list(rest);
        } else if let Some(rest) = line.strip_prefix(COMPLAINT_PREFIX) {
            out.complaint = Some(rest.to_lowercase());
        }
    }
    out
}

/// Whole-term occurrence: the match is not glued to other alphanumerics.
fn mentions(text: &str, term: &str) -> bool {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(off) = text[start..].find(term) {
        let i = start + off;
        let j = i + term.len();
        let before_ok = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
        let after_ok = j == bytes.len() || !(bytes[j].is_ascii_alphanumeric() || bytes[j] == b'-');
        if before_ok && after_ok {
            return true;
        }
        start = i + 1;
    }
    false
}

fn unit_hash(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

impl MockBackend {
    pub fn new(seed: u64, position_bias: f64, profiles: &[KnowledgeProfile]) -> Self {
        let mut general = BTreeMap::new();
        let mut vocabulary = BTreeSet::new();
        for p in profiles {
            let mut known: BTreeSet<String> = p
                .symptoms
                .iter()
                .filter(|s| {
                    let h = unit_hash(&[b"coverage", &seed.to_le_bytes(), p.disease.as_bytes(), s.as_bytes()]);
                    (h as f64 / u64::MAX as f64) < MOCK_GENERAL_COVERAGE
                })
                .cloned()
                .collect();
            if known.is_empty() {
                known.insert(p.symptoms[0].clone());
            }
            vocabulary.extend(p.symptoms.iter().cloned());
            general.insert(p.disease.clone(), known);
        }
        MockBackend {
            seed,
            position_bias,
            max_in_flight: 4,
            general,
            vocabulary,
        }
    }

    pub fn from_config(config: &BackendConfig, profiles: &[KnowledgeProfile]) -> Result<Self, BackendError> {
        let seed = config
            .seed
            .ok_or_else(|| BackendError::Config("mock backend requires a seed".into()))?;
        let mut m = MockBackend::new(seed, config.position_bias, profiles);
        m.max_in_flight = config.max_in_flight;
        Ok(m)
    }

    /// Registers a category label whose symptom set is the union of its members'.
    pub fn with_group(mut self, name: &str, members: &[String]) -> Self {
        let union: BTreeSet<String> = members
            .iter()
            .filter_map(|m| self.general.get(m))
            .flat_map(|s| s.iter().cloned())
            .collect();
        self.general.insert(name.to_string(), union);
        self
    }

    /// Symptoms the mock associates with `label` when no preamble is given.
    pub fn general_knowledge(&self, label: &str) -> Option<&BTreeSet<String>> {
        self.general.get(label)
    }

    fn noise(&self, content: &[u8; 32], label: &str) -> f64 {
        let h = unit_hash(&[b"noise", &self.seed.to_le_bytes(), content, label.as_bytes()]);
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        // Box-Muller
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        MOCK_NOISE * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// The exponent for one option before exponentiation.
    pub fn exponent(&self, prompt: &McqaPrompt, parsed_position: usize) -> f64 {
        let parsed = parse_prompt(prompt);
        self.exponent_parsed(prompt, &parsed, parsed_position)
    }

    fn exponent_parsed(&self, prompt: &McqaPrompt, parsed: &ParsedPrompt, position: usize) -> f64 {
        let label = prompt.options[position].label.as_str();
        let n = prompt.options.len();
        let mut e = self.noise(&prompt.content_digest(), label);
        if n > 1 {
            e += self.position_bias * (n - 1 - position) as f64 / (n - 1) as f64;
        }

        let general: Option<BTreeSet<&str>> =
            self.general.get(label).map(|s| s.iter().map(String::as_str).collect());
        // Preamble symptoms the mock did not already associate with the label,
        // weighted by how much of its prior belief the preamble confirms.
        let mut extra: BTreeSet<&str> = BTreeSet::new();
        let mut trust = 0.0;
        if let Some((disease, symptoms)) = &parsed.specialty {
            if disease == label {
                e += MOCK_GAMMA;
                let listed: BTreeSet<&str> = symptoms.iter().map(String::as_str).collect();
                trust = match &general {
                    Some(g) => g.intersection(&listed).count() as f64 / g.len() as f64,
                    None => 1.0,
                };
                extra = match &general {
                    Some(g) => listed.difference(g).copied().collect(),
                    None => listed,
                };
            }
        }
        if general.is_none() && extra.is_empty() {
            return e;
        }
        let known = general.unwrap_or_default();

        let (present, denied): (Vec<&str>, Vec<&str>) = match &parsed.complaint {
            Some(text) => (
                self.vocabulary
                    .iter()
                    .map(String::as_str)
                    .chain(known.iter().copied())
                    .chain(extra.iter().copied())
                    .filter(|t| mentions(text, t))
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
                Vec::new(),
            ),
            None => (
                parsed.present.iter().map(String::as_str).collect(),
                parsed.denied.iter().map(String::as_str).collect(),
            ),
        };
        let weight = |s: &&str| {
            if known.contains(*s) {
                1.0
            } else if extra.contains(*s) {
                trust
            } else {
                0.0
            }
        };
        let hits: f64 = present.iter().map(weight).sum();
        let misses: f64 = denied.iter().map(weight).sum();
        e + MOCK_ALPHA * hits - MOCK_BETA * misses
    }
}

impl ScoreBackend for MockBackend {
    fn id(&self) -> String {
        format!("mock:seed={}:bias={}", self.seed, self.position_bias)
    }

    fn model_name(&self) -> &str {
        "mock"
    }

    fn option_scores(&self, prompt: &McqaPrompt) -> Result<OptionScores, BackendError> {
        let parsed = parse_prompt(prompt);
        let raw = (0..prompt.options.len())
            .map(|i| self.exponent_parsed(prompt, &parsed, i).exp())
            .collect();
        Ok(OptionScores { raw })
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}

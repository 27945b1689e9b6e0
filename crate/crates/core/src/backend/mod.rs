//! Scoring backends and the option-probability normalization that turns
//! per-symbol scores into a diagnostic distribution.

mod cache;
mod hierarchy;
mod http;
mod mock;
pub mod prompt;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::knowledge::KnowledgeProfile;

pub use cache::{cache_key, CachedBackend, ScoreCache};
pub use hierarchy::{hierarchical_distribution, load_taxonomy, Category, Taxonomy};
pub use http::HttpBackend;
pub use mock::{MockBackend, MOCK_ALPHA, MOCK_BETA, MOCK_GAMMA, MOCK_GENERAL_COVERAGE, MOCK_NOISE};
pub use prompt::{build_prompt, McqaOption, McqaPrompt, QuestionSource};

/// Tolerance on the unit-sum invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Non-negative score per option, in prompt option order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionScores {
    pub raw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticDistribution {
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
    /// The backend gave no mass to any option and the distribution fell back to uniform.
    #[serde(default)]
    pub uniform_fallback: bool,
}

impl DiagnosticDistribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Self {
        DiagnosticDistribution {
            labels,
            probs,
            uniform_fallback: false,
        }
    }

    pub fn uniform(labels: Vec<String>) -> Self {
        let n = labels.len();
        DiagnosticDistribution::new(labels, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(labels: Vec<String>, index: usize) -> Self {
        let mut probs = vec![0.0; labels.len()];
        probs[index] = 1.0;
        DiagnosticDistribution::new(labels, probs)
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn argmax_label(&self) -> &str {
        &self.labels[self.argmax()]
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }

    /// Checks non-negativity, finiteness, label alignment and unit sum.
    pub fn check(&self) -> Result<(), String> {
        if self.labels.len() != self.probs.len() {
            return Err(format!("{} labels vs {} probs", self.labels.len(), self.probs.len()));
        }
        if let Some(p) = self.probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(format!("invalid probability {p}"));
        }
        let s: f64 = self.probs.iter().sum();
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(format!("sum {s}"));
        }
        Ok(())
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Anything that can score the option symbols of a multiple-choice prompt.
pub trait ScoreBackend: Send + Sync {
    /// Stable identifier used in cache keys and report metadata.
    fn id(&self) -> String;

    fn model_name(&self) -> &str;

    fn option_scores(&self, prompt: &McqaPrompt) -> Result<OptionScores, BackendError>;

    /// Upper bound on concurrent requests callers should issue.
    fn max_in_flight(&self) -> usize {
        1
    }
}

impl<B: ScoreBackend + ?Sized> ScoreBackend for Arc<B> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn option_scores(&self, prompt: &McqaPrompt) -> Result<OptionScores, BackendError> {
        (**self).option_scores(prompt)
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

/// Divides each option's score by the total over all options.
pub fn normalize_scores(labels: Vec<String>, scores: &OptionScores) -> Result<DiagnosticDistribution, BackendError> {
    if scores.raw.len() != labels.len() {
        return Err(BackendError::ScoreLength {
            expected: labels.len(),
            got: scores.raw.len(),
        });
    }
    if let Some(s) = scores.raw.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(BackendError::Response(format!("invalid option score {s}")));
    }
    let total: f64 = scores.raw.iter().sum();
    if total <= 0.0 {
        log::warn!("all option scores are zero; using a uniform distribution");
        let mut d = DiagnosticDistribution::uniform(labels);
        d.uniform_fallback = true;
        return Ok(d);
    }
    let probs = scores.raw.iter().map(|s| s / total).collect();
    Ok(DiagnosticDistribution::new(labels, probs))
}

pub fn option_distribution(
    backend: &dyn ScoreBackend,
    prompt: &McqaPrompt,
) -> Result<DiagnosticDistribution, BackendError> {
    let scores = backend.option_scores(prompt)?;
    normalize_scores(prompt.labels(), &scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_model_name")]
    pub model_name: String,
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default = "default_timeout")]
    pub request_timeout: f64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub position_bias: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_model_name() -> String {
    "mock".into()
}
fn default_timeout() -> f64 {
    30.0
}
fn default_in_flight() -> usize {
    4
}

impl BackendConfig {
    pub fn mock(seed: u64) -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: None,
            model_name: default_model_name(),
            auth_env_var: None,
            request_timeout: default_timeout(),
            max_in_flight: default_in_flight(),
            position_bias: 0.0,
            seed: Some(seed),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_in_flight == 0 {
            return Err(BackendError::Config("max_in_flight must be positive".into()));
        }
        match self.kind {
            BackendKind::Mock => {
                if self.seed.is_none() {
                    return Err(BackendError::Config("mock backend requires a seed".into()));
                }
                if self.position_bias.is_nan() || self.position_bias < 0.0 {
                    return Err(BackendError::Config("position_bias must be >= 0".into()));
                }
            }
            BackendKind::Http => {
                if self.endpoint.as_deref().unwrap_or("").is_empty() {
                    return Err(BackendError::Config("http backend requires an endpoint".into()));
                }
                if self.model_name.is_empty() {
                    return Err(BackendError::Config("http backend requires a model_name".into()));
                }
                if self.request_timeout.is_nan() || self.request_timeout <= 0.0 {
                    return Err(BackendError::Config("request_timeout must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Builds the configured backend. The mock's world model comes from `profiles`.
pub fn build_backend(
    config: &BackendConfig,
    profiles: &[KnowledgeProfile],
) -> Result<Arc<dyn ScoreBackend>, BackendError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Mock => Arc::new(MockBackend::from_config(config, profiles)?),
        BackendKind::Http => Arc::new(HttpBackend::from_config(config)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("l{i}")).collect()
    }

    #[test]
    fn renormalizes_raw_scores() {
        let d = normalize_scores(labels(4), &OptionScores { raw: vec![0.2, 0.1, 0.1, 0.0] }).unwrap();
        let expect = [0.5, 0.25, 0.25, 0.0];
        for (p, e) in d.probs.iter().zip(expect) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_scores_give_uniform() {
        let d = normalize_scores(labels(4), &OptionScores { raw: vec![0.3; 4] }).unwrap();
        assert!(d.probs.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn scale_invariance() {
        let raw = vec![0.2, 0.7, 0.05, 0.01];
        let base = normalize_scores(labels(4), &OptionScores { raw: raw.clone() }).unwrap();
        let scaled = normalize_scores(
            labels(4),
            &OptionScores {
                raw: raw.iter().map(|r| r * 3.7).collect(),
            },
        )
        .unwrap();
        for (a, b) in base.probs.iter().zip(&scaled.probs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_falls_back_to_uniform_with_flag() {
        let d = normalize_scores(labels(3), &OptionScores { raw: vec![0.0; 3] }).unwrap();
        assert!(d.uniform_fallback);
        assert!(d.check().is_ok());
    }

    #[test]
    fn bad_scores_rejected() {
        assert!(normalize_scores(labels(2), &OptionScores { raw: vec![1.0] }).is_err());
        assert!(normalize_scores(labels(2), &OptionScores { raw: vec![1.0, -0.1] }).is_err());
        assert!(normalize_scores(labels(2), &OptionScores { raw: vec![1.0, f64::NAN] }).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(BackendConfig::mock(1).validate().is_ok());
        let mut c = BackendConfig::mock(1);
        c.seed = None;
        assert!(c.validate().is_err());
        c.kind = BackendKind::Http;
        c.model_name = "m".into();
        assert!(c.validate().is_err());
        c.endpoint = Some("http://localhost:1".into());
        assert!(c.validate().is_ok());
    }
}

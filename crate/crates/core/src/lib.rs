//! Multi-specialist consultation for automatic diagnosis.
//!
//! A single LLM backend is conditioned on per-disease knowledge to act as a
//! panel of specialists. Each specialist answers a multiple-choice diagnosis
//! question; its option scores become a probability distribution, and the
//! panel's distributions are fused, either by fixed rules or by a small
//! trainable attention module.

pub mod backend;
pub mod data;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod fusion;
pub mod knowledge;
pub mod overlap;
pub mod specialist;

pub use backend::{DiagnosticDistribution, ScoreBackend};
pub use data::{Dataset, PatientRecord, SymptomAssertion, SymptomView, ViewMode};
pub use knowledge::KnowledgeProfile;

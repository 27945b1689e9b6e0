//! Multiple-choice prompt construction.
//!
//! Two templates are registered:
//!
//! ```text
//! default:                              text:
//! [You are a specialist in D. ...]      [You are a specialist in D. ...]
//! Patient presents with: a, b.          Patient complaint: <free text>
//! Patient denies: c | none.             Which diagnosis is most likely?
//! Which diagnosis is most likely?       A. ...
//! A. ...                                Answer:
//! Answer:
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::SymptomView;
use crate::error::BackendError;
use crate::knowledge::KnowledgeProfile;

pub const DEFAULT_TEMPLATE: &str = "default";
pub const TEXT_TEMPLATE: &str = "text";
pub const TEMPLATES: &[&str] = &[DEFAULT_TEMPLATE, TEXT_TEMPLATE];

pub(crate) const PRESENT_PREFIX: &str = "Patient presents with: ";
pub(crate) const DENIED_PREFIX: &str = "Patient denies: ";
pub(crate) const COMPLAINT_PREFIX: &str = "Patient complaint: ";
pub(crate) const PREAMBLE_PREFIX: &str = "You are a specialist in ";
pub(crate) const PREAMBLE_SYMPTOMS: &str = ". Characteristic symptoms: ";
const QUESTION_LINE: &str = "Which diagnosis is most likely?";
const ANSWER_CUE: &str = "Answer: ";
pub const MAX_OPTIONS: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqaOption {
    pub symbol: char,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqaPrompt {
    pub template_id: String,
    pub preamble: Option<String>,
    pub question: String,
    pub options: Vec<McqaOption>,
}

/// What the question is built from.
#[derive(Debug, Clone, Copy)]
pub enum QuestionSource<'a> {
    Symptoms(&'a SymptomView),
    Text(&'a str),
}

pub fn symbol_for(index: usize) -> char {
    (b'A' + index as u8) as char
}

impl McqaPrompt {
    /// Full prompt text sent to a backend; ends with the answer cue.
    pub fn text(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.preamble {
            out.push_str(p);
            out.push('\n');
        }
        out.push_str(&self.question);
        out.push('\n');
        out.push_str(QUESTION_LINE);
        out.push('\n');
        for o in &self.options {
            out.push(o.symbol);
            out.push_str(". ");
            out.push_str(&o.label);
            out.push('\n');
        }
        out.push_str(ANSWER_CUE);
        out
    }

    pub fn labels(&self) -> Vec<String> {
        self.options.iter().map(|o| o.label.clone()).collect()
    }

    /// Same preamble and question with the options relabelled in a new order.
    pub fn with_options(&self, labels: &[String]) -> Result<McqaPrompt, BackendError> {
        Ok(McqaPrompt {
            template_id: self.template_id.clone(),
            preamble: self.preamble.clone(),
            question: self.question.clone(),
            options: lettered(labels)?,
        })
    }

    /// Digest of everything except the option list.
    pub fn content_digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        if let Some(p) = &self.preamble {
            h.update(p.as_bytes());
        }
        h.update([0u8]);
        h.update(self.question.as_bytes());
        h.finalize().into()
    }
}

fn lettered(labels: &[String]) -> Result<Vec<McqaOption>, BackendError> {
    if labels.len() < 2 {
        return Err(BackendError::TooFewOptions(labels.len()));
    }
    if labels.len() > MAX_OPTIONS {
        return Err(BackendError::TooManyOptions(labels.len()));
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(BackendError::DuplicateOption(l.clone()));
        }
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, l)| McqaOption {
            symbol: symbol_for(i),
            label: l.clone(),
        })
        .collect())
}

pub fn render_preamble(knowledge: &KnowledgeProfile) -> String {
    format!(
        "{PREAMBLE_PREFIX}{}{PREAMBLE_SYMPTOMS}{}.",
        knowledge.disease,
        knowledge.symptoms.join(", ")
    )
}

fn join_or_none<'a>(items: impl Iterator<Item = &'a str>) -> String {
    let v: Vec<&str> = items.collect();
    if v.is_empty() {
        "none".to_string()
    } else {
        v.join(", ")
    }
}

pub fn build_prompt(
    source: QuestionSource<'_>,
    options: &[String],
    knowledge: Option<&KnowledgeProfile>,
    template_id: &str,
) -> Result<McqaPrompt, BackendError> {
    let question = match (template_id, source) {
        (DEFAULT_TEMPLATE, QuestionSource::Symptoms(view)) => format!(
            "{PRESENT_PREFIX}{}.\n{DENIED_PREFIX}{}.",
            join_or_none(view.present()),
            join_or_none(view.denied())
        ),
        (DEFAULT_TEMPLATE | TEXT_TEMPLATE, QuestionSource::Text(text)) => {
            format!("{COMPLAINT_PREFIX}{}", text.trim())
        }
        (TEXT_TEMPLATE, QuestionSource::Symptoms(_)) => {
            return Err(BackendError::TemplateInput {
                template: template_id.into(),
                detail: "the text template needs a free-text complaint".into(),
            })
        }
        (other, _) => return Err(BackendError::UnknownTemplate(other.into())),
    };
    Ok(McqaPrompt {
        template_id: template_id.into(),
        preamble: knowledge.map(render_preamble),
        question,
        options: lettered(options)?,
    })
}

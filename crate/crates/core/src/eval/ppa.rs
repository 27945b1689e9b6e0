//! Proportion of Plurality Agreement: how often a backend picks the same
//! answer when the option order is permuted.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{option_distribution, McqaPrompt, ScoreBackend};
use crate::error::EvalError;

/// Largest option count evaluated exhaustively (6! = 720 orders).
pub const MAX_EXHAUSTIVE_OPTIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PpaMode {
    Exhaustive,
    Sampled { k: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPpa {
    pub ppa: f64,
    pub permutations: usize,
    pub plurality_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpaReport {
    pub prompt_count: usize,
    /// Orders evaluated per prompt (n! when exhaustive, else the sample size).
    pub permutations_per_prompt: usize,
    pub mean_ppa: f64,
    pub per_prompt: Vec<f64>,
}

impl PpaReport {
    pub fn from_prompts(results: &[PromptPpa]) -> Self {
        let per_prompt: Vec<f64> = results.iter().map(|r| r.ppa).collect();
        let mean_ppa = if per_prompt.is_empty() {
            0.0
        } else {
            per_prompt.iter().sum::<f64>() / per_prompt.len() as f64
        };
        PpaReport {
            prompt_count: results.len(),
            permutations_per_prompt: results.iter().map(|r| r.permutations).max().unwrap_or(0),
            mean_ppa,
            per_prompt,
        }
    }
}

pub fn factorial(n: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

/// All permutations of 0..n in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).expect("successor exists");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

fn permutation_set(n: usize, mode: PpaMode) -> Result<Vec<Vec<usize>>, EvalError> {
    match mode {
        PpaMode::Exhaustive => {
            if n > MAX_EXHAUSTIVE_OPTIONS {
                return Err(EvalError::ExhaustiveTooLarge(n));
            }
            Ok(all_permutations(n))
        }
        PpaMode::Sampled { k, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let total = factorial(n);
            let k = total.map_or(k, |t| k.min(t));
            // Small spaces: shuffle the full list and take a prefix.
            if n <= 8 {
                let mut all = all_permutations(n);
                all.shuffle(&mut rng);
                all.truncate(k);
                return Ok(all);
            }
            let mut seen = HashSet::with_capacity(k);
            let mut out = Vec::with_capacity(k);
            let mut p: Vec<usize> = (0..n).collect();
            while out.len() < k {
                p.shuffle(&mut rng);
                if seen.insert(p.clone()) {
                    out.push(p.clone());
                }
            }
            Ok(out)
        }
    }
}

/// PPA of one prompt. Plurality ties go to the lexicographically smallest label.
pub fn ppa(backend: &dyn ScoreBackend, base: &McqaPrompt, mode: PpaMode) -> Result<PromptPpa, EvalError> {
    let labels = base.labels();
    let perms = permutation_set(labels.len(), mode)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for perm in &perms {
        let ordered: Vec<String> = perm.iter().map(|&i| labels[i].clone()).collect();
        let prompt = base.with_options(&ordered)?;
        let dist = option_distribution(backend, &prompt)?;
        *counts.entry(dist.argmax_label().to_string()).or_default() += 1;
    }
    // BTreeMap iterates labels in ascending order; keep the first maximum.
    let (label, top) = counts
        .iter()
        .fold((String::new(), 0usize), |(bl, bc), (l, &c)| if c > bc { (l.clone(), c) } else { (bl, bc) });
    Ok(PromptPpa {
        ppa: top as f64 / perms.len() as f64,
        permutations: perms.len(),
        plurality_label: label,
    })
}

//! Persistent, content-addressed store of option scores.
//!
//! The file is JSON lines, one `{"key", "scores", "labels"}` object per
//! entry, appended as new prompts are scored. Keys hash the backend id,
//! model name and the exact prompt bytes, so reordering options yields a
//! different key.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{McqaPrompt, OptionScores, ScoreBackend};
use crate::error::BackendError;

pub fn cache_key(backend_id: &str, model_name: &str, prompt_text: &str) -> String {
    let mut h = Sha256::new();
    for part in [backend_id, model_name, prompt_text] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheLine {
    key: String,
    scores: Vec<f64>,
    labels: Vec<String>,
}

#[derive(Debug)]
pub struct ScoreCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheLine>>,
    writer: Mutex<Option<File>>,
    warnings: Mutex<Vec<String>>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        ScoreCache {
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
            warnings: Mutex::new(Vec::new()),
        }
    }

    /// Opens (or creates) a cache file. A corrupt file is moved aside to
    /// `<name>.corrupt` and the cache starts empty.
    pub fn open(path: &Path) -> Result<Self, BackendError> {
        let cache = ScoreCache {
            path: Some(path.to_path_buf()),
            ..ScoreCache::in_memory()
        };
        if path.exists() {
            match read_lines(path) {
                Ok(entries) => *cache.entries.write().expect("cache lock") = entries,
                Err(detail) => {
                    let aside = path.with_extension("corrupt");
                    let msg = format!("cache file {} is corrupt ({detail}); starting empty", path.display());
                    log::warn!("{msg}");
                    cache.warnings.lock().expect("cache lock").push(msg);
                    fs::rename(path, &aside).map_err(|e| BackendError::Cache(e.to_string()))?;
                }
            }
        } else if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| BackendError::Cache(e.to_string()))?;
        }
        Ok(cache)
    }

    pub fn get(&self, key: &str) -> Option<OptionScores> {
        self.entries
            .read()
            .expect("cache lock")
            .get(key)
            .map(|l| OptionScores { raw: l.scores.clone() })
    }

    fn get_checked(&self, key: &str, labels: &[String]) -> Option<OptionScores> {
        let entries = self.entries.read().expect("cache lock");
        let line = entries.get(key)?;
        (line.labels == labels).then(|| OptionScores { raw: line.scores.clone() })
    }

    pub fn put(&self, key: &str, labels: &[String], scores: &OptionScores) -> Result<(), BackendError> {
        let line = CacheLine {
            key: key.to_string(),
            scores: scores.raw.clone(),
            labels: labels.to_vec(),
        };
        if let Some(path) = &self.path {
            let mut writer = self.writer.lock().expect("cache lock");
            if writer.is_none() {
                *writer = Some(
                    OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(path)
                        .map_err(|e| BackendError::Cache(e.to_string()))?,
                );
            }
            let mut text = serde_json::to_string(&line).expect("cache line serializes");
            text.push('\n');
            writer
                .as_mut()
                .expect("writer opened")
                .write_all(text.as_bytes())
                .map_err(|e| BackendError::Cache(e.to_string()))?;
        }
        self.entries.write().expect("cache lock").insert(line.key.clone(), line);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn warnings(&self) -> Vec<String> {
        self.warnings.lock().expect("cache lock").clone()
    }
}

fn read_lines(path: &Path) -> Result<HashMap<String, CacheLine>, String> {
    let file = File::open(path).map_err(|e| e.to_string())?;
    let mut out = HashMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CacheLine = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", n + 1))?;
        if entry.scores.len() != entry.labels.len() {
            return Err(format!("line {}: scores/labels length mismatch", n + 1));
        }
        out.insert(entry.key.clone(), entry);
    }
    Ok(out)
}

/// Serves scores from the cache and records misses.
pub struct CachedBackend<B> {
    inner: B,
    cache: std::sync::Arc<ScoreCache>,
}

impl<B: ScoreBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: std::sync::Arc<ScoreCache>) -> Self {
        CachedBackend { inner, cache }
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }
}

impl<B: ScoreBackend> ScoreBackend for CachedBackend<B> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn option_scores(&self, prompt: &McqaPrompt) -> Result<OptionScores, BackendError> {
        let key = cache_key(&self.inner.id(), self.inner.model_name(), &prompt.text());
        let labels = prompt.labels();
        if let Some(hit) = self.cache.get_checked(&key, &labels) {
            return Ok(hit);
        }
        let scores = self.inner.option_scores(prompt)?;
        self.cache.put(&key, &labels, &scores)?;
        Ok(scores)
    }

    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }
}

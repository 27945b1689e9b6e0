//! Completions-endpoint backend reading top logprobs at the answer position.

use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendConfig, McqaPrompt, OptionScores, ScoreBackend};
use crate::error::BackendError;

const MAX_ATTEMPTS: u32 = 3;
const BACKOFF: Duration = Duration::from_millis(200);

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    endpoint: String,
    model_name: String,
    auth: Option<String>,
    max_in_flight: usize,
}

impl HttpBackend {
    pub fn from_config(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let endpoint = config.endpoint.clone().unwrap_or_default();
        let auth = match &config.auth_env_var {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                BackendError::Config(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.request_timeout))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpBackend {
            client,
            url: format!("{}/v1/completions", endpoint.trim_end_matches('/')),
            endpoint,
            model_name: config.model_name.clone(),
            auth,
            max_in_flight: config.max_in_flight,
        })
    }

    fn request_body(&self, prompt: &McqaPrompt) -> Value {
        json!({
            "model": self.model_name,
            "prompt": prompt.text(),
            "max_tokens": 1,
            "logprobs": 26,
            "temperature": 0,
        })
    }

    fn post_once(&self, body: &Value) -> Result<Value, (bool, String)> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(key) = &self.auth {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((retry, format!("HTTP {status}")));
        }
        resp.json::<Value>().map_err(|e| (false, e.to_string()))
    }
}

/// Reads option-symbol scores from a completions response.
///
/// Top-logprob entries are rank ordered, so the first token matching a
/// symbol is also the most probable one; the maximum is taken over tokens
/// whose trimmed text equals the symbol. Symbols absent from the map score 0.
pub fn scores_from_response(response: &Value, symbols: &[char]) -> Result<(OptionScores, Vec<char>), BackendError> {
    let top = response
        .pointer("/choices/0/logprobs/top_logprobs/0")
        .and_then(Value::as_object)
        .ok_or_else(|| BackendError::Response("missing choices[0].logprobs.top_logprobs[0]".into()))?;
    let mut raw = Vec::with_capacity(symbols.len());
    let mut missing = Vec::new();
    for &sym in symbols {
        let mut best: Option<f64> = None;
        for (token, lp) in top {
            if token.trim().len() == 1 && token.trim().starts_with(sym) {
                let lp = lp
                    .as_f64()
                    .ok_or_else(|| BackendError::Response(format!("logprob for '{token}' is not a number")))?;
                best = Some(best.map_or(lp, |b: f64| b.max(lp)));
            }
        }
        match best {
            Some(lp) => raw.push(lp.exp()),
            None => {
                missing.push(sym);
                raw.push(0.0);
            }
        }
    }
    Ok((OptionScores { raw }, missing))
}

impl ScoreBackend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn option_scores(&self, prompt: &McqaPrompt) -> Result<OptionScores, BackendError> {
        let body = self.request_body(prompt);
        let mut last = String::new();
        for attempt in 1..=MAX_ATTEMPTS {
            match self.post_once(&body) {
                Ok(v) => {
                    let symbols: Vec<char> = prompt.options.iter().map(|o| o.symbol).collect();
                    let (scores, missing) = scores_from_response(&v, &symbols)?;
                    if !missing.is_empty() {
                        log::warn!("response lacks scores for {missing:?}; treating them as 0");
                    }
                    return Ok(scores);
                }
                Err((retry, detail)) => {
                    last = detail;
                    if !retry {
                        return Err(BackendError::Transport { attempts: attempt, detail: last });
                    }
                    if attempt < MAX_ATTEMPTS {
                        std::thread::sleep(BACKOFF * 2u32.pow(attempt - 1));
                    }
                }
            }
        }
        Err(BackendError::Transport {
            attempts: MAX_ATTEMPTS,
            detail: last,
        })
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}

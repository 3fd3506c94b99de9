//! Zero-shot simplifier client for OpenAI-compatible chat endpoints.
//!
//! The model is asked for a flat JSON object with one key,
//! `simplified_version`; [`extract_simplified`] enforces that contract.

use std::thread;
use std::time::Duration;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::render_inference_prompt;
use crate::error::{Error, Result};

pub const SYSTEM_PROMPT: &str = "You are a helpful assistant designed to output JSON with a single key \"simplified_version\". Ensure there is no nesting in the JSON structure.";

pub const OUTPUT_KEY: &str = "simplified_version";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("payload is not JSON: {0}")]
    NotJson(String),
    #[error("payload is JSON but not an object")]
    NotAnObject,
    #[error("payload has no `simplified_version` key")]
    MissingKey,
    #[error("payload contains nested structure under `{0}`")]
    NestedStructure(String),
    #[error("`simplified_version` is not a string")]
    NonStringValue,
}

/// Returns the `simplified_version` string from a flat JSON object.
pub fn extract_simplified(payload: &[u8]) -> Result<String, ExtractError> {
    let value: Value =
        serde_json::from_slice(payload).map_err(|e| ExtractError::NotJson(e.to_string()))?;
    let obj = value.as_object().ok_or(ExtractError::NotAnObject)?;
    if let Some((key, _)) = obj
        .iter()
        .find(|(_, v)| matches!(v, Value::Object(_) | Value::Array(_)))
    {
        return Err(ExtractError::NestedStructure(key.clone()));
    }
    match obj.get(OUTPUT_KEY) {
        None => Err(ExtractError::MissingKey),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(ExtractError::NonStringValue),
    }
}

#[derive(Debug, Clone)]
pub struct SimplifierConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_attempts: u32,
    pub timeout: Duration,
    /// First retry delay; doubles on each further attempt.
    pub backoff: Duration,
    pub max_tokens: Option<u32>,
}

impl SimplifierConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        SimplifierConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            max_attempts: 3,
            timeout: Duration::from_secs(60),
            backoff: Duration::from_millis(500),
            max_tokens: None,
        }
    }
}

pub struct SimplifierClient {
    config: SimplifierConfig,
    http: reqwest::blocking::Client,
}

enum Attempt {
    /// Worth retrying: transport failure, 429/5xx, or unparseable content.
    Transient {
        message: String,
        payload: Option<String>,
    },
    Fatal(Error),
}

impl SimplifierClient {
    pub fn new(config: SimplifierConfig) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::Endpoint {
                attempts: 0,
                message: e.to_string(),
                last_payload: None,
            })?;
        Ok(SimplifierClient { config, http })
    }

    pub fn request_body(&self, abstract_text: &str) -> Result<Value> {
        let mut body = json!({
            "model": self.config.model,
            "temperature": 0,
            "response_format": {"type": "json_object"},
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": render_inference_prompt(abstract_text)?},
            ],
        });
        if let Some(max) = self.config.max_tokens {
            body["max_tokens"] = json!(max);
        }
        Ok(body)
    }

    fn attempt(&self, body: &Value) -> std::result::Result<String, Attempt> {
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let mut req = self.http.post(url).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Attempt::Transient {
            message: e.to_string(),
            payload: None,
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Attempt::Transient {
            message: e.to_string(),
            payload: None,
        })?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Attempt::Transient {
                message: format!("HTTP {status}"),
                payload: Some(text),
            });
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(Error::Endpoint {
                attempts: 1,
                message: format!("HTTP {status}"),
                last_payload: Some(text),
            }));
        }
        let envelope: Value = serde_json::from_str(&text).map_err(|e| Attempt::Transient {
            message: format!("response is not JSON: {e}"),
            payload: Some(text.clone()),
        })?;
        let content = envelope
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| Attempt::Transient {
                message: "response has no choices[0].message.content".into(),
                payload: Some(text.clone()),
            })?;
        match extract_simplified(content.as_bytes()) {
            Ok(s) => Ok(s),
            Err(e @ ExtractError::NotJson(_)) => Err(Attempt::Transient {
                message: e.to_string(),
                payload: Some(content.to_string()),
            }),
            Err(e) => Err(Attempt::Fatal(e.into())),
        }
    }

    /// Simplifies one abstract, retrying transient failures with exponential backoff.
    pub fn request_simplification(&self, abstract_text: &str) -> Result<String> {
        let body = self.request_body(abstract_text)?;
        let attempts = self.config.max_attempts.max(1);
        let mut delay = self.config.backoff;
        let mut last = (String::new(), None);
        for n in 1..=attempts {
            match self.attempt(&body) {
                Ok(s) => return Ok(s),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient { message, payload }) => {
                    last = (message, payload);
                    if n < attempts {
                        thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(Error::Endpoint {
            attempts,
            message: last.0,
            last_payload: last.1,
        })
    }

    /// Simplifies each abstract with at most `concurrency` requests in flight.
    /// Results are in input order.
    pub fn simplify_batch(
        &self,
        abstracts: &[&str],
        concurrency: usize,
    ) -> Result<Vec<Result<String>>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(concurrency.max(1))
            .build()
            .map_err(|_| Error::Numeric("could not build thread pool"))?;
        Ok(pool.install(|| {
            abstracts
                .par_iter()
                .map(|a| self.request_simplification(a))
                .collect()
        }))
    }
}

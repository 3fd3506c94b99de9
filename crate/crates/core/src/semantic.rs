//! Semantic retention via greedy token matching over contextual embeddings
//! (BERTScore F1 without IDF weighting or baseline rescaling).
//!
//! The scoring core never loads a model. Vectors come from an
//! [`EmbeddingProvider`]; [`HttpEmbeddingProvider`] speaks the sidecar
//! service protocol:
//!
//! ```text
//! POST /embed   {"texts": ["..."], "layer": 18}
//!   200 -> {"model_id": "...", "layer": 18,
//!           "results": [{"tokens": [...], "special": [...], "vectors": [[...], ...]}]}
//!   413 -> {"error": "text_too_long", "index": 0, "detail": "..."}
//! GET /health -> {"status": "ok" | "loading", "model_id": "...", "num_layers": 24, "max_tokens": 512}
//! ```

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

pub const DEFAULT_LAYER: u32 = 18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("text {index} exceeds the provider context window: {detail}")]
    TextTooLong { index: usize, detail: String },
    #[error("text to embed is empty")]
    EmptyText,
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
}

/// Provider tokens and their vectors from one encoder layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedText {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    /// Sequence delimiters and similar tokens that are excluded from matching.
    pub special: Vec<bool>,
    pub layer: u32,
    pub provider_id: String,
}

impl EmbeddedText {
    pub fn new(
        tokens: Vec<String>,
        vectors: Vec<Vec<f64>>,
        special: Vec<bool>,
        layer: u32,
        provider_id: impl Into<String>,
    ) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidEmbedding(m));
        if tokens.len() != vectors.len() || tokens.len() != special.len() {
            return invalid(format!(
                "{} tokens, {} vectors, {} special flags",
                tokens.len(),
                vectors.len(),
                special.len()
            ));
        }
        if special.iter().all(|&s| s) {
            return invalid("no content tokens".into());
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return invalid("zero-dimensional vectors".into());
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return invalid(format!(
                    "vector {i} has dimension {} (expected {dim})",
                    v.len()
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return invalid(format!("vector {i} is not finite"));
            }
            if v.iter().all(|&x| x == 0.0) {
                return invalid(format!("vector {i} is all zero"));
            }
        }
        Ok(EmbeddedText {
            tokens,
            vectors,
            special,
            layer,
            provider_id: provider_id.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    fn content_vectors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.vectors
            .iter()
            .zip(&self.special)
            .filter(|(_, &s)| !s)
            .map(|(v, _)| v)
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn layer(&self) -> u32;
    fn embed(&self, text: &str) -> std::result::Result<EmbeddedText, EmbedError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy-match precision/recall/F1 of `candidate` against `reference`.
pub fn bertscore(candidate: &EmbeddedText, reference: &EmbeddedText) -> Result<SemanticScore> {
    if candidate.provider_id != reference.provider_id || candidate.layer != reference.layer {
        return Err(Error::ProviderMismatch(format!(
            "{}@{} vs {}@{}",
            candidate.provider_id, candidate.layer, reference.provider_id, reference.layer
        )));
    }
    if candidate.dim() != reference.dim() {
        return Err(Error::ProviderMismatch(format!(
            "dimension {} vs {}",
            candidate.dim(),
            reference.dim()
        )));
    }
    let cand: Vec<Vec<f64>> = candidate.content_vectors().map(|v| unit(v)).collect();
    let refs: Vec<Vec<f64>> = reference.content_vectors().map(|v| unit(v)).collect();
    // Identical directions score exactly 1 despite rounding in the norms.
    let sim: Vec<Vec<f64>> = cand
        .iter()
        .map(|c| {
            refs.iter()
                .map(|r| {
                    if c == r {
                        1.0
                    } else {
                        dot(c, r).clamp(-1.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();

    let precision = sim
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / cand.len() as f64;
    let recall = (0..refs.len())
        .map(|j| {
            sim.iter()
                .map(|row| row[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / refs.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SemanticScore {
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
    pub layer: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResult {
    pub tokens: Vec<String>,
    #[serde(default)]
    pub special: Vec<bool>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub model_id: String,
    pub layer: u32,
    pub results: Vec<EmbedResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedErrorBody {
    pub error: String,
    #[serde(default)]
    pub index: Option<usize>,
    #[serde(default)]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(default)]
    pub num_layers: Option<u32>,
    #[serde(default)]
    pub max_tokens: Option<usize>,
}

/// Client for the embedding sidecar.
pub struct HttpEmbeddingProvider {
    base_url: String,
    layer: u32,
    model_id: String,
    client: reqwest::blocking::Client,
}

impl HttpEmbeddingProvider {
    /// Connects and checks `/health`; the reported model id becomes the provider id.
    pub fn connect(base_url: &str, layer: u32, timeout: Duration) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        let base_url = base_url.trim_end_matches('/').to_string();
        let health = Self::fetch_health(&client, &base_url)?;
        if health.status != "ok" {
            return Err(EmbedError::ProviderUnavailable(format!(
                "service status is `{}`",
                health.status
            )));
        }
        if let Some(n) = health.num_layers {
            if layer > n {
                return Err(EmbedError::InvalidResponse(format!(
                    "layer {layer} requested but model has {n} layers"
                )));
            }
        }
        Ok(HttpEmbeddingProvider {
            model_id: health.model_id.unwrap_or_else(|| base_url.clone()),
            base_url,
            layer,
            client,
        })
    }

    fn fetch_health(
        client: &reqwest::blocking::Client,
        base_url: &str,
    ) -> Result<HealthStatus, EmbedError> {
        let resp = client
            .get(format!("{base_url}/health"))
            .send()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        resp.json()
            .map_err(|e| EmbedError::InvalidResponse(format!("health: {e}")))
    }

    pub fn health(&self) -> Result<HealthStatus, EmbedError> {
        Self::fetch_health(&self.client, &self.base_url)
    }

    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddedText>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let request = EmbedRequest {
            texts: texts.iter().map(|t| t.to_string()).collect(),
            layer: self.layer,
        };
        let resp = self
            .client
            .post(format!("{}/embed", self.base_url))
            .json(&request)
            .send()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .text()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        if !status.is_success() {
            let parsed: Option<EmbedErrorBody> = serde_json::from_str(&body).ok();
            return Err(match parsed {
                Some(b) if b.error == "text_too_long" => EmbedError::TextTooLong {
                    index: b.index.unwrap_or(0),
                    detail: b.detail.unwrap_or_default(),
                },
                Some(b) if status.is_server_error() => {
                    EmbedError::ProviderUnavailable(format!("{status}: {}", b.error))
                }
                Some(b) => EmbedError::InvalidResponse(format!("{status}: {}", b.error)),
                None if status.is_server_error() => {
                    EmbedError::ProviderUnavailable(status.to_string())
                }
                None => EmbedError::InvalidResponse(status.to_string()),
            });
        }
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| EmbedError::InvalidResponse(e.to_string()))?;
        if parsed.results.len() != texts.len() {
            return Err(EmbedError::InvalidResponse(format!(
                "{} results for {} texts",
                parsed.results.len(),
                texts.len()
            )));
        }
        if parsed.layer != self.layer {
            return Err(EmbedError::InvalidResponse(format!(
                "asked for layer {}, got {}",
                self.layer, parsed.layer
            )));
        }
        parsed
            .results
            .into_iter()
            .map(|r| {
                let special = if r.special.is_empty() {
                    vec![false; r.tokens.len()]
                } else {
                    r.special
                };
                EmbeddedText::new(r.tokens, r.vectors, special, parsed.layer, &self.model_id)
                    .map_err(|e| EmbedError::InvalidResponse(e.to_string()))
            })
            .collect()
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn provider_id(&self) -> &str {
        &self.model_id
    }

    fn layer(&self) -> u32 {
        self.layer
    }

    fn embed(&self, text: &str) -> Result<EmbeddedText, EmbedError> {
        let mut out = self.embed_batch(&[text])?;
        Ok(out.remove(0))
    }
}

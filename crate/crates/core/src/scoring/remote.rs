//! HTTP client for an external teacher service.
//!
//! `POST /score` takes `{"query", "docs": [{"doc_id", "text"}]}` and answers
//! `{"scores": [...]}` aligned with `docs`. `GET /health` answers
//! `{"status": "ok", "model": ...}`.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::error::{Error, Result};
use crate::types::Document;

pub const DEFAULT_BATCH_SIZE: usize = 64;
const DEFAULT_ATTEMPTS: usize = 3;

#[derive(Debug, Serialize)]
pub struct ScoreRequest<'a> {
    pub query: &'a str,
    pub docs: &'a [Document],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model: String,
}

#[derive(Debug, Clone)]
pub struct RemoteTeacher {
    base_url: String,
    agent: ureq::Agent,
    batch_size: usize,
    attempts: usize,
    backoff: Duration,
}

enum Failure {
    Transient(String),
    Fatal(String),
}

impl RemoteTeacher {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(Duration::from_secs(120))
            .build();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent,
            batch_size: DEFAULT_BATCH_SIZE,
            attempts: DEFAULT_ATTEMPTS,
            backoff: Duration::from_millis(200),
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn with_retries(mut self, attempts: usize, backoff: Duration) -> Self {
        self.attempts = attempts.max(1);
        self.backoff = backoff;
        self
    }

    pub fn health(&self) -> Result<HealthResponse> {
        let url = format!("{}/health", self.base_url);
        let resp = self.agent.get(&url).call().map_err(|e| Error::Remote {
            batch: 0,
            attempts: 1,
            message: e.to_string(),
        })?;
        resp.into_json().map_err(|e| Error::Remote {
            batch: 0,
            attempts: 1,
            message: e.to_string(),
        })
    }

    fn post_once(&self, request: &ScoreRequest<'_>) -> std::result::Result<ScoreResponse, Failure> {
        let url = format!("{}/score", self.base_url);
        match self.agent.post(&url).send_json(request) {
            Ok(resp) => resp
                .into_json::<ScoreResponse>()
                .map_err(|e| Failure::Fatal(format!("malformed response: {e}"))),
            Err(ureq::Error::Status(code, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                let msg = format!("HTTP {code}: {body}");
                if code >= 500 || code == 429 {
                    Err(Failure::Transient(msg))
                } else {
                    Err(Failure::Fatal(msg))
                }
            }
            Err(e) => Err(Failure::Transient(e.to_string())),
        }
    }

    fn score_chunk(&self, batch: usize, query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        let request = ScoreRequest { query, docs };
        let mut last = String::new();
        for attempt in 1..=self.attempts {
            match self.post_once(&request) {
                Ok(resp) => return validate(batch, docs.len(), resp.scores),
                Err(Failure::Fatal(message)) => {
                    return Err(Error::Remote {
                        batch,
                        attempts: attempt,
                        message,
                    })
                }
                Err(Failure::Transient(message)) => {
                    log::warn!("teacher batch {batch} attempt {attempt} failed: {message}");
                    last = message;
                    if attempt < self.attempts {
                        thread::sleep(self.backoff * attempt as u32);
                    }
                }
            }
        }
        Err(Error::Remote {
            batch,
            attempts: self.attempts,
            message: last,
        })
    }
}

fn validate(batch: usize, expected: usize, scores: Vec<f64>) -> Result<Vec<f64>> {
    if scores.len() != expected {
        return Err(Error::ScoreCountMismatch {
            batch,
            expected,
            got: scores.len(),
        });
    }
    if let Some(position) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore { batch, position });
    }
    Ok(scores)
}

impl Scorer for RemoteTeacher {
    fn score_batch(&self, query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        let mut scores = Vec::with_capacity(docs.len());
        for (batch, chunk) in docs.chunks(self.batch_size).enumerate() {
            scores.extend(self.score_chunk(batch, query, chunk)?);
        }
        Ok(scores)
    }
}

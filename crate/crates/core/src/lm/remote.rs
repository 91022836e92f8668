//! Client for a next-token service speaking a small JSON protocol:
//!
//! * `GET  {endpoint}/handshake` → `{"vocab_hash": "...", "vocab_size": N}`
//! * `POST {endpoint}/next` with `{"context": [ids]}` → `{"probs": [f64; N]}`

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_ids, LmBackend};
use crate::error::{Error, Result};
use crate::tokens::{TokenId, Vocabulary};

/// Deviation from 1 beyond which a response is logged before renormalizing.
pub const REMOTE_NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Handshake {
    pub vocab_hash: String,
    #[serde(default)]
    pub vocab_size: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextRequest {
    pub context: Vec<TokenId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextResponse {
    pub probs: Vec<f64>,
}

pub struct RemoteBackend {
    endpoint: String,
    client: reqwest::blocking::Client,
    vocab_size: usize,
}

fn unavailable(endpoint: &str, e: reqwest::Error) -> Error {
    Error::BackendUnavailable(format!("{endpoint}: {e}"))
}

impl RemoteBackend {
    /// Connects and verifies that the service uses the same vocabulary.
    pub fn connect(endpoint: &str, vocab: &Vocabulary, timeout: Duration) -> Result<Self> {
        let endpoint = endpoint.trim_end_matches('/').to_string();
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        let hs: Handshake = client
            .get(format!("{endpoint}/handshake"))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| unavailable(&endpoint, e))?;
        let expected = vocab.hash();
        if hs.vocab_hash != expected {
            return Err(Error::Config(format!(
                "remote vocabulary hash {} does not match local {expected}",
                hs.vocab_hash
            )));
        }
        if let Some(n) = hs.vocab_size {
            if n != vocab.len() {
                return Err(Error::Config(format!("remote vocabulary size {n} != local {}", vocab.len())));
            }
        }
        Ok(RemoteBackend { endpoint, client, vocab_size: vocab.len() })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

/// Validates and renormalizes a probability vector received from a service.
pub(crate) fn normalize_remote(mut probs: Vec<f64>, vocab_size: usize) -> Result<Vec<f64>> {
    if probs.len() != vocab_size {
        return Err(Error::BackendUnavailable(format!(
            "remote returned {} probabilities for a vocabulary of {vocab_size}",
            probs.len()
        )));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::BackendUnavailable("remote returned negative or non-finite probabilities".into()));
    }
    let sum: f64 = probs.iter().sum();
    if sum <= 0.0 {
        return Err(Error::BackendUnavailable("remote returned an all-zero distribution".into()));
    }
    if (sum - 1.0).abs() > REMOTE_NORMALIZATION_TOLERANCE {
        tracing::warn!("remote distribution sums to {sum}; renormalizing");
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    Ok(probs)
}

impl LmBackend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<Vec<f64>> {
        check_ids(context, self.vocab_size)?;
        let resp: NextResponse = self
            .client
            .post(format!("{}/next", self.endpoint))
            .json(&NextRequest { context: context.to_vec() })
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| unavailable(&self.endpoint, e))?;
        normalize_remote(resp.probs, self.vocab_size)
    }
}

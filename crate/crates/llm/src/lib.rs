//! Chat-completion client for prompt experiments.
//!
//! [`HttpBackend`] talks to any OpenAI-compatible `/chat/completions`
//! endpoint, [`MockBackend`] answers in-process, and [`run_batch`] drives
//! either with bounded concurrency, preserving input order and skipping
//! items already stored in the run directory.

mod batch;
mod config;
mod http;
mod mock;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{run_batch, BatchOutcome, ItemRecord, ItemStore};
pub use config::{ConfigError, EndpointConfig};
pub use http::HttpBackend;
pub use mock::{MockBackend, MockMode};

/// One prompt to complete. `id` names the item (usually the passage id) and
/// keys stored results; it is never sent over the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub id: String,
    pub prompt: String,
}

/// One HTTP attempt (or mock call) as recorded in the request log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptLog {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmError {
    #[error("endpoint unreachable after {attempts} attempts: {detail}")]
    EndpointUnreachable { attempts: u32, detail: String },
    #[error("gave up after {attempts} attempts: {detail}")]
    RetriesExhausted { attempts: u32, detail: String },
    #[error("malformed completion response: {detail}")]
    MalformedResponse { detail: String },
    #[error("request rejected with HTTP {status}: {detail}")]
    RequestRejected { status: u16, detail: String },
}

/// Result of one `complete` call plus every attempt it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub result: Result<String, LlmError>,
    pub attempts: Vec<AttemptLog>,
}

#[async_trait]
pub trait CompletionBackend: Send + Sync {
    async fn complete(&self, request: &CompletionRequest) -> Outcome;
}

fn millis(d: Duration) -> u64 {
    d.as_millis().try_into().unwrap_or(u64::MAX)
}

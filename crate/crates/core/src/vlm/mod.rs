//! Prompt construction, model backends (HTTP and offline mocks) and the
//! transcript cache.

mod backend;
mod cache;
mod client;
mod http;
mod mock;
mod prompt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::Plan;
pub use backend::{Adapter, AuthStyle, BackendConfig, BackendKind};
pub use cache::TranscriptCache;
pub use client::{QueryContext, VlmClient};
pub use http::{http_request_count, scrub};
pub use mock::{
    mock_noisy_respond, mock_noisy_respond_detailed, oracle_response, Corruption, Script, UNDEFINED_VERB,
};
pub use prompt::{build_prompt, prompt_hash, verb_gloss, ImageRef, Prompt, PromptError, PromptSpec, TemplateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("credential variable `{0}` is not set")]
    MissingCredential(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("response is not JSON (HTTP {status}): {snippet}")]
    NonJson { status: u16, snippet: String },
    #[error("response JSON has no message text: {snippet}")]
    UnexpectedShape { snippet: String },
    #[error("HTTP {status}: {snippet}")]
    Http { status: u16, snippet: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("replay mode and no cached transcript at {path}")]
    ReplayMiss { path: String },
    #[error("invalid backend configuration: {0}")]
    BadConfig(String),
    #[error("mock backend: {0}")]
    Mock(String),
    #[error("transcript cache: {0}")]
    Cache(String),
}

impl QueryError {
    pub fn kind(&self) -> &'static str {
        match self {
            QueryError::MissingCredential(_) => "missing_credential",
            QueryError::Auth { .. } => "auth",
            QueryError::Timeout { .. } => "timeout",
            QueryError::NonJson { .. } => "non_json",
            QueryError::UnexpectedShape { .. } => "unexpected_shape",
            QueryError::Http { .. } => "http",
            QueryError::Transport(_) => "transport",
            QueryError::ReplayMiss { .. } => "replay_miss",
            QueryError::BadConfig(_) => "bad_config",
            QueryError::Mock(_) => "mock",
            QueryError::Cache(_) => "cache",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&QueryError> for ErrorRecord {
    fn from(e: &QueryError) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// One model exchange. Cached transcripts are returned as-is on later runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub prompt_hash: String,
    pub backend_id: String,
    pub task_key: String,
    pub trial: u32,
    /// Request body as sent, with image data replaced by its digest.
    pub request: serde_json::Value,
    pub response_text: Option<String>,
    pub parsed: Option<Plan>,
    pub parse_error: Option<String>,
    pub error: Option<ErrorRecord>,
    pub attempts: u32,
    pub latency_ms: u64,
    pub timestamp_ms: u64,
}

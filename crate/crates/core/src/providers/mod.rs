//! Abstractions over the external capabilities the pipeline depends on:
//! chat completion, text embedding and web search.
//!
//! Each capability has a live HTTP client and a deterministic scripted mock
//! (see [`mock`]) that satisfies the same contract, so the whole pipeline can
//! run offline.

pub mod bing;
pub mod fixtures;
pub mod mock;
pub mod openai;

use std::collections::HashSet;
use std::future::Future;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

/// Delay before the single retry of a transiently failed provider call.
pub const RETRY_DELAY: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    /// Transient failure (network, timeout, 5xx, rate limit). Retryable.
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    /// The provider rejected the request. Not retryable.
    #[error("provider refused the request: {0}")]
    Refused(String),
    /// The caller broke an operation precondition.
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    /// The provider answered with something that does not fit its wire format.
    #[error("unexpected provider response: {0}")]
    BadResponse(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Unreachable(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    /// Checks the request preconditions: a leading system message, a
    /// temperature in `[0, 2]` and a positive output budget.
    pub fn validate(&self) -> Result<(), ProviderError> {
        match self.messages.first() {
            None => return Err(ProviderError::InvalidRequest("messages must not be empty".into())),
            Some(first) if first.role != Role::System => {
                return Err(ProviderError::InvalidRequest("first message must have the system role".into()));
            }
            Some(_) => {}
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.max_output_tokens == 0 {
            return Err(ProviderError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }

    pub fn system_text(&self) -> Option<&str> {
        self.messages.iter().find(|m| m.role == Role::System).map(|m| m.content.as_str())
    }

    pub fn user_text(&self) -> Option<&str> {
        self.messages.iter().find(|m| m.role == Role::User).map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Complete,
    Truncated,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: FinishReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub rank: usize,
    pub url: String,
    pub title: String,
    pub snippet: String,
}

#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn chat_complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

#[async_trait]
pub trait EmbeddingProvider: Send + Sync {
    /// Embeds every text; the output is parallel to the input.
    async fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

#[async_trait]
pub trait SearchProvider: Send + Sync {
    /// Returns at most `n` results ranked `1..=m`, deduplicated by normalized URL.
    async fn search(&self, query: &str, n: usize) -> Result<Vec<SearchResult>, ProviderError>;
}

/// Normalizes a URL for deduplication: scheme and host lowercased, fragment
/// removed, query string kept. Returns `None` for anything that is not an
/// absolute URL.
pub fn normalize_url(raw: &str) -> Option<String> {
    let mut url = Url::parse(raw.trim()).ok()?;
    if url.cannot_be_a_base() || url.host_str().is_none() {
        return None;
    }
    // the url crate already lowercases scheme and host for special schemes
    url.set_fragment(None);
    Some(url.to_string())
}

/// Raw search hit before ranking and deduplication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawHit {
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub snippet: String,
}

/// Turns provider hits into a ranked result list: drops non-absolute URLs,
/// keeps the first occurrence of each normalized URL, truncates to `n` and
/// assigns contiguous ranks from 1.
pub fn finalize_results(hits: impl IntoIterator<Item = RawHit>, n: usize) -> Vec<SearchResult> {
    let mut seen = HashSet::new();
    hits.into_iter()
        .filter(|hit| match normalize_url(&hit.url) {
            Some(key) => seen.insert(key),
            None => false,
        })
        .take(n)
        .enumerate()
        .map(|(i, hit)| SearchResult {
            rank: i + 1,
            url: hit.url.trim().to_string(),
            title: hit.title,
            snippet: hit.snippet,
        })
        .collect()
}

pub(crate) fn check_search_args(query: &str, n: usize) -> Result<(), ProviderError> {
    if query.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("search query must not be empty".into()));
    }
    if n == 0 {
        return Err(ProviderError::InvalidRequest("result count must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn check_embed_inputs(texts: &[String]) -> Result<(), ProviderError> {
    if let Some(i) = texts.iter().position(|t| t.split_whitespace().next().is_none()) {
        return Err(ProviderError::InvalidRequest(format!("text {i} is empty after normalization")));
    }
    Ok(())
}

/// Checks that every vector shares one dimension.
pub(crate) fn check_dimensions(vectors: &[EmbeddingVector]) -> Result<(), ProviderError> {
    if let Some(first) = vectors.first() {
        let expected = first.dimension();
        if let Some(bad) = vectors.iter().find(|v| v.dimension() != expected) {
            return Err(ProviderError::DimensionMismatch { expected, actual: bad.dimension() });
        }
    }
    Ok(())
}

/// Runs `call`, retrying exactly once after `delay` if the first attempt
/// failed with a retryable error.
pub async fn with_retry<T, F, Fut>(delay: Duration, mut call: F) -> Result<T, ProviderError>
where
    F: FnMut() -> Fut,
    Fut: Future<Output = Result<T, ProviderError>>,
{
    match call().await {
        Err(err) if err.is_retryable() => {
            tracing::warn!(error = %err, "provider call failed, retrying once");
            tokio::time::sleep(delay).await;
            call().await
        }
        other => other,
    }
}

/// Maps a reqwest transport error or HTTP status onto the provider error kinds.
pub(crate) fn classify_status(status: reqwest::StatusCode, body: &str) -> ProviderError {
    let detail = format!("HTTP {}: {}", status.as_u16(), body.chars().take(200).collect::<String>());
    if status.is_server_error()
        || status == reqwest::StatusCode::TOO_MANY_REQUESTS
        || status == reqwest::StatusCode::REQUEST_TIMEOUT
    {
        ProviderError::Unreachable(detail)
    } else {
        ProviderError::Refused(detail)
    }
}

pub(crate) fn transport_error(err: reqwest::Error) -> ProviderError {
    ProviderError::Unreachable(err.to_string())
}

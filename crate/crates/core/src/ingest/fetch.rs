use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use reqwest::header::CONTENT_TYPE;
use thiserror::Error;

use crate::providers::normalize_url;

pub const USER_AGENT: &str = concat!("lateral/", env!("CARGO_PKG_VERSION"), " (lateral-reading assistant)");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("timed out")]
    Timeout,
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("unsupported content type {0:?}")]
    UnsupportedContentType(String),
    #[error("body exceeds {0} bytes")]
    TooLarge(usize),
    #[error("too many redirects")]
    TooManyRedirects,
    #[error("{0}")]
    Transport(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentKind {
    Html,
    PlainText,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub body: String,
    pub kind: ContentKind,
}

#[async_trait]
pub trait PageFetcher: Send + Sync {
    async fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchLimits {
    pub timeout: Duration,
    pub max_bytes: usize,
    pub max_redirects: usize,
}

impl Default for FetchLimits {
    fn default() -> Self {
        Self { timeout: Duration::from_secs(10), max_bytes: 5 * 1024 * 1024, max_redirects: 5 }
    }
}

pub struct HttpFetcher {
    client: reqwest::Client,
    limits: FetchLimits,
}

impl HttpFetcher {
    pub fn new(limits: FetchLimits) -> Self {
        let client = reqwest::Client::builder()
            .user_agent(USER_AGENT)
            .timeout(limits.timeout)
            .redirect(reqwest::redirect::Policy::limited(limits.max_redirects))
            .build()
            .expect("reqwest client builds with static settings");
        Self { client, limits }
    }
}

fn content_kind(header: Option<&str>) -> Result<ContentKind, FetchError> {
    let mime = header.and_then(|h| h.split(';').next()).map(|m| m.trim().to_ascii_lowercase()).unwrap_or_default();
    match mime.as_str() {
        "text/html" | "application/xhtml+xml" => Ok(ContentKind::Html),
        "text/plain" => Ok(ContentKind::PlainText),
        _ => Err(FetchError::UnsupportedContentType(mime)),
    }
}

fn map_reqwest(err: reqwest::Error) -> FetchError {
    if err.is_timeout() {
        FetchError::Timeout
    } else if err.is_redirect() {
        FetchError::TooManyRedirects
    } else {
        FetchError::Transport(err.to_string())
    }
}

#[async_trait]
impl PageFetcher for HttpFetcher {
    async fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let mut response = self.client.get(url).send().await.map_err(map_reqwest)?;
        let status = response.status();
        if status != reqwest::StatusCode::OK {
            return Err(FetchError::Status(status.as_u16()));
        }
        let kind = content_kind(response.headers().get(CONTENT_TYPE).and_then(|v| v.to_str().ok()))?;
        let cap = self.limits.max_bytes;
        if response.content_length().is_some_and(|len| len > cap as u64) {
            return Err(FetchError::TooLarge(cap));
        }
        let mut body = Vec::new();
        while let Some(chunk) = response.chunk().await.map_err(map_reqwest)? {
            if body.len() + chunk.len() > cap {
                return Err(FetchError::TooLarge(cap));
            }
            body.extend_from_slice(&chunk);
        }
        Ok(FetchedPage { body: String::from_utf8_lossy(&body).into_owned(), kind })
    }
}

/// Serves HTML pages from a fixture map keyed by URL; unknown URLs are 404s.
pub struct FixtureFetcher {
    pages: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl FixtureFetcher {
    pub fn new(pages: BTreeMap<String, String>) -> Self {
        let pages = pages.into_iter().map(|(url, body)| (normalize_url(&url).unwrap_or(url), body)).collect();
        Self { pages, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl PageFetcher for FixtureFetcher {
    async fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = normalize_url(url).unwrap_or_else(|| url.to_string());
        self.pages
            .get(&key)
            .map(|body| FetchedPage { body: body.clone(), kind: ContentKind::Html })
            .ok_or(FetchError::Status(404))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_types() {
        assert_eq!(content_kind(Some("text/html; charset=utf-8")), Ok(ContentKind::Html));
        assert_eq!(content_kind(Some("TEXT/PLAIN")), Ok(ContentKind::PlainText));
        assert!(content_kind(Some("application/pdf")).is_err());
        assert!(content_kind(None).is_err());
    }

    #[tokio::test]
    async fn fixture_fetcher_matches_normalized_urls() {
        let fetcher =
            FixtureFetcher::new(BTreeMap::from([("https://Example.org/a".to_string(), "<p>x</p>".to_string())]));
        assert!(fetcher.fetch("https://example.org/a#frag").await.is_ok());
        assert_eq!(fetcher.fetch("https://example.org/b").await, Err(FetchError::Status(404)));
        assert_eq!(fetcher.calls(), 2);
    }
}

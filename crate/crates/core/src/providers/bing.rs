//! Bing Web Search v7 client.

use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;

use super::{
    ProviderError, RETRY_DELAY, RawHit, SearchProvider, SearchResult, check_search_args, classify_status,
    finalize_results, transport_error, with_retry,
};

pub const DEFAULT_ENDPOINT: &str = "https://api.bing.microsoft.com/v7.0/search";

/// Optional query parameters forwarded verbatim when set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// `mkt`, e.g. `en-US`.
    pub market: Option<String>,
    /// `freshness`: `Day`, `Week`, `Month` or a date range.
    pub freshness: Option<String>,
    /// `safeSearch`: `Off`, `Moderate` or `Strict`.
    pub safe_search: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BingConfig {
    pub endpoint: String,
    pub api_key: String,
    pub options: SearchOptions,
    pub timeout: Duration,
    pub retry_delay: Duration,
}

impl BingConfig {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            options: SearchOptions::default(),
            timeout: Duration::from_secs(30),
            retry_delay: RETRY_DELAY,
        }
    }
}

pub struct BingSearch {
    cfg: BingConfig,
    client: reqwest::Client,
}

impl BingSearch {
    pub fn new(cfg: BingConfig) -> Self {
        let client = reqwest::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .expect("reqwest client builds with static settings");
        Self { cfg, client }
    }

    async fn fetch(&self, query: &str, n: usize) -> Result<BingReply, ProviderError> {
        let mut params: Vec<(&str, String)> = vec![("q", query.to_string()), ("count", n.to_string())];
        let opts = &self.cfg.options;
        if let Some(m) = &opts.market {
            params.push(("mkt", m.clone()));
        }
        if let Some(f) = &opts.freshness {
            params.push(("freshness", f.clone()));
        }
        if let Some(s) = &opts.safe_search {
            params.push(("safeSearch", s.clone()));
        }
        let response = self
            .client
            .get(&self.cfg.endpoint)
            .header("Ocp-Apim-Subscription-Key", &self.cfg.api_key)
            .query(&params)
            .send()
            .await
            .map_err(transport_error)?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().await.unwrap_or_default();
            return Err(classify_status(status, &body));
        }
        response.json().await.map_err(|e| ProviderError::BadResponse(e.to_string()))
    }
}

#[derive(Deserialize)]
struct BingReply {
    #[serde(rename = "webPages", default)]
    web_pages: Option<WebPages>,
}

#[derive(Deserialize)]
struct WebPages {
    #[serde(default)]
    value: Vec<WebPage>,
}

#[derive(Deserialize)]
struct WebPage {
    url: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    snippet: String,
}

#[async_trait]
impl SearchProvider for BingSearch {
    async fn search(&self, query: &str, n: usize) -> Result<Vec<SearchResult>, ProviderError> {
        check_search_args(query, n)?;
        let reply = with_retry(self.cfg.retry_delay, || self.fetch(query, n)).await?;
        let hits = reply.web_pages.map(|w| w.value).unwrap_or_default().into_iter().map(|p| RawHit {
            url: p.url,
            title: p.name,
            snippet: p.snippet,
        });
        Ok(finalize_results(hits, n))
    }
}

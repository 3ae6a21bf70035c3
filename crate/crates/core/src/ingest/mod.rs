//! Page ingest: fetch each search result, reduce it to plaintext and split
//! the plaintext into fixed-width word segments.

pub mod extract;
pub mod fetch;
pub mod segment;

use serde::{Deserialize, Serialize};

pub use extract::{EmptyContent, extract_plaintext};
pub use fetch::{FetchError, FetchLimits, FetchedPage, FixtureFetcher, HttpFetcher, PageFetcher};
pub use segment::{DEFAULT_SEGMENT_WIDTH, TextSegment, segment};

use crate::providers::SearchResult;
use fetch::ContentKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FetchStatus {
    Ok,
    FetchFailed,
    EmptyContent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebDocument {
    pub doc_number: usize,
    pub url: String,
    pub title: String,
    pub plaintext: String,
    pub fetch_status: FetchStatus,
}

/// Fetches and extracts one search result. Failures are folded into
/// `fetch_status`; the returned document is numbered by the result's rank.
pub async fn ingest_result(fetcher: &dyn PageFetcher, result: &SearchResult) -> WebDocument {
    let fetched = fetcher.fetch(&result.url).await;
    let (plaintext, fetch_status) = match fetched {
        Err(err) => {
            tracing::debug!(url = %result.url, %err, "fetch failed");
            (String::new(), FetchStatus::FetchFailed)
        }
        Ok(page) => {
            let text = match page.kind {
                ContentKind::Html => extract_plaintext(&page.body),
                ContentKind::PlainText => extract::normalize_plaintext(&page.body),
            };
            match text {
                Ok(text) => (text, FetchStatus::Ok),
                Err(EmptyContent) => (String::new(), FetchStatus::EmptyContent),
            }
        }
    };
    WebDocument {
        doc_number: result.rank,
        url: result.url.clone(),
        title: result.title.clone(),
        plaintext,
        fetch_status,
    }
}

/// Keeps only successfully ingested documents and renumbers them
/// contiguously from 1, preserving their order.
pub fn usable_documents(docs: Vec<WebDocument>) -> Vec<WebDocument> {
    docs.into_iter()
        .filter(|d| d.fetch_status == FetchStatus::Ok)
        .enumerate()
        .map(|(i, d)| WebDocument { doc_number: i + 1, ..d })
        .collect()
}

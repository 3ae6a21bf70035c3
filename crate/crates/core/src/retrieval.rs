//! Per-page segment retrieval by embedding cosine similarity.

use std::cmp::Ordering;

use futures::future::try_join_all;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DEFAULT_SEGMENT_WIDTH, TextSegment, WebDocument, segment};
use crate::providers::{EmbeddingProvider, EmbeddingVector, ProviderError};
use crate::questions::LateralQuestion;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error("no document produced any segment")]
    EmptyContext,
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SimilarityError> {
    if a.dimension() != b.dimension() {
        return Err(SimilarityError::DimensionMismatch(a.dimension(), b.dimension()));
    }
    let (mut dot, mut norm_a, mut norm_b) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.values().iter().zip(b.values()) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSegment {
    pub segment: TextSegment,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub k_segments_per_page: usize,
    pub results_per_question: usize,
    pub segment_width: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self { k_segments_per_page: 2, results_per_question: 3, segment_width: DEFAULT_SEGMENT_WIDTH }
    }
}

/// Orders by descending score, then ascending `seq`.
fn by_score_then_seq(a: &ScoredSegment, b: &ScoredSegment) -> Ordering {
    b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then(a.segment.seq.cmp(&b.segment.seq))
}

/// Scores pre-embedded segments against a pre-embedded query and keeps the
/// best `k`. `vectors[i]` must be the embedding of `segments[i]`.
pub fn rank_segments(
    query: &EmbeddingVector,
    segments: &[TextSegment],
    vectors: &[EmbeddingVector],
    k: usize,
) -> Result<Vec<ScoredSegment>, SimilarityError> {
    debug_assert_eq!(segments.len(), vectors.len());
    let mut scored = segments
        .iter()
        .zip(vectors)
        .map(|(segment, vector)| Ok(ScoredSegment { segment: segment.clone(), score: cosine(query, vector)? }))
        .collect::<Result<Vec<_>, SimilarityError>>()?;
    scored.sort_by(by_score_then_seq);
    scored.truncate(k);
    Ok(scored)
}

async fn embed_segments(
    embedder: &dyn EmbeddingProvider,
    segments: &[TextSegment],
) -> Result<Vec<EmbeddingVector>, ProviderError> {
    if segments.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<String> = segments.iter().map(|s| s.text.clone()).collect();
    let vectors = embedder.embed(&texts).await?;
    if vectors.len() != texts.len() {
        return Err(ProviderError::BadResponse("embedding count does not match input".into()));
    }
    Ok(vectors)
}

async fn embed_question(
    embedder: &dyn EmbeddingProvider,
    question: &LateralQuestion,
) -> Result<EmbeddingVector, ProviderError> {
    embedder
        .embed(std::slice::from_ref(&question.text))
        .await?
        .pop()
        .ok_or_else(|| ProviderError::BadResponse("no embedding returned for the question".into()))
}

/// The `k` segments most similar to the question, best first; ties go to
/// the earlier segment.
pub async fn top_k_segments(
    embedder: &dyn EmbeddingProvider,
    question: &LateralQuestion,
    doc_segments: &[TextSegment],
    k: usize,
) -> Result<Vec<ScoredSegment>, RetrievalError> {
    if doc_segments.is_empty() {
        return Ok(Vec::new());
    }
    let query = embed_question(embedder, question).await?;
    let vectors = embed_segments(embedder, doc_segments).await?;
    Ok(rank_segments(&query, doc_segments, &vectors, k)?)
}

/// Selected segments for one document, in document order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocContext {
    pub doc_number: usize,
    pub url: String,
    pub title: String,
    pub segments: Vec<ScoredSegment>,
}

/// Picks the top-k segments of every document independently and returns
/// them per document in document order, each document's segments sorted
/// by position. The question is embedded once for all documents.
pub async fn select_context(
    embedder: &dyn EmbeddingProvider,
    question: &LateralQuestion,
    docs: &[WebDocument],
    cfg: &RetrievalConfig,
) -> Result<Vec<DocContext>, RetrievalError> {
    let segmented: Vec<(&WebDocument, Vec<TextSegment>)> =
        docs.iter().map(|d| (d, segment(&d.plaintext, cfg.segment_width, d.doc_number))).collect();
    if segmented.iter().all(|(_, segs)| segs.is_empty()) {
        return Err(RetrievalError::EmptyContext);
    }
    let query = embed_question(embedder, question).await?;
    let per_doc = segmented.iter().map(|(doc, segs)| {
        let query = &query;
        async move {
            let vectors = embed_segments(embedder, segs).await?;
            let mut picked = rank_segments(query, segs, &vectors, cfg.k_segments_per_page)?;
            picked.sort_by_key(|s| s.segment.seq);
            Ok::<_, RetrievalError>(DocContext {
                doc_number: doc.doc_number,
                url: doc.url.clone(),
                title: doc.title.clone(),
                segments: picked,
            })
        }
    });
    let contexts = try_join_all(per_doc).await?;
    Ok(contexts.into_iter().filter(|c| !c.segments.is_empty()).collect())
}

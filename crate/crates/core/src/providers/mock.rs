//! Deterministic offline providers driven by a [`FixtureSet`].

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::sync::atomic::{AtomicUsize, Ordering};

use async_trait::async_trait;
use sha2::{Digest, Sha256};

use super::fixtures::{FixtureSet, ScriptEntry, ScriptedFailure};
use super::{
    ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, EmbeddingVector, FinishReason, ProviderError, RawHit,
    SearchProvider, SearchResult, check_embed_inputs, check_search_args, finalize_results,
};
use crate::answer::prompt::{ANSWER_SYSTEM_PROMPT, question_from_user_message};
use crate::questions::QUESTION_SYSTEM_PROMPT;

pub const MOCK_EMBEDDING_DIM: usize = 64;

/// Which pipeline stage a chat request belongs to, recognised by its system preamble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PromptClass {
    QuestionGeneration,
    AnswerGeneration,
}

impl PromptClass {
    pub fn of(request: &ChatRequest) -> Option<Self> {
        match request.system_text()? {
            s if s == QUESTION_SYSTEM_PROMPT => Some(Self::QuestionGeneration),
            s if s == ANSWER_SYSTEM_PROMPT => Some(Self::AnswerGeneration),
            _ => None,
        }
    }
}

/// Scripted chat provider.
///
/// Answer-generation entries carrying a `question` are matched by exact
/// question text and never consumed. All other entries of a class form a
/// queue served in order, wrapping around when exhausted.
pub struct MockChat {
    scripts: BTreeMap<PromptClass, Vec<ScriptEntry>>,
    cursors: Mutex<BTreeMap<PromptClass, usize>>,
    log: Mutex<Vec<ChatRequest>>,
}

impl MockChat {
    pub fn new(question_generation: Vec<ScriptEntry>, answer_generation: Vec<ScriptEntry>) -> Self {
        let scripts = BTreeMap::from([
            (PromptClass::QuestionGeneration, question_generation),
            (PromptClass::AnswerGeneration, answer_generation),
        ]);
        Self { scripts, cursors: Mutex::new(BTreeMap::new()), log: Mutex::new(Vec::new()) }
    }

    pub fn from_fixtures(set: &FixtureSet) -> Self {
        Self::new(set.chat.question_generation.clone(), set.chat.answer_generation.clone())
    }

    /// Every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.log.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    fn pick(&self, class: PromptClass, request: &ChatRequest) -> Option<ScriptEntry> {
        let entries = self.scripts.get(&class)?;
        if class == PromptClass::AnswerGeneration {
            let question = request.user_text().and_then(question_from_user_message);
            if let Some(q) = question
                && let Some(hit) = entries.iter().find(|e| e.question.as_deref() == Some(q))
            {
                return Some(hit.clone());
            }
        }
        let queue: Vec<&ScriptEntry> = entries.iter().filter(|e| e.question.is_none()).collect();
        if queue.is_empty() {
            return None;
        }
        let mut cursors = self.cursors.lock().unwrap();
        let cursor = cursors.entry(class).or_insert(0);
        let entry = queue[*cursor % queue.len()].clone();
        *cursor += 1;
        Some(entry)
    }
}

#[async_trait]
impl ChatProvider for MockChat {
    async fn chat_complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        self.log.lock().unwrap().push(request.clone());
        let class =
            PromptClass::of(request).ok_or_else(|| ProviderError::Refused("mock: unrecognised prompt class".into()))?;
        let entry = self
            .pick(class, request)
            .ok_or_else(|| ProviderError::Refused(format!("mock: no script for {class:?}")))?;
        match (entry.response, entry.error) {
            (Some(text), _) => {
                let content = text.trim().to_string();
                let finish_reason = if content.is_empty() { FinishReason::Error } else { FinishReason::Complete };
                Ok(ChatResponse { content, finish_reason })
            }
            (None, Some(ScriptedFailure::Unreachable)) => {
                Err(ProviderError::Unreachable("mock: scripted outage".into()))
            }
            (None, _) => Err(ProviderError::Refused("mock: scripted refusal".into())),
        }
    }
}

/// Hash-derived embeddings: equal (whitespace-normalized) texts map to equal
/// unit vectors of dimension [`MOCK_EMBEDDING_DIM`].
pub struct MockEmbedder {
    seed: u64,
    calls: AtomicUsize,
    texts: AtomicUsize,
}

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        Self { seed, calls: AtomicUsize::new(0), texts: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn texts_embedded(&self) -> usize {
        self.texts.load(Ordering::SeqCst)
    }

    pub fn vector_for(&self, text: &str) -> EmbeddingVector {
        let normalized = crate::text::collapse_whitespace(text);
        let mut values = Vec::with_capacity(MOCK_EMBEDDING_DIM);
        let mut block = 0u32;
        while values.len() < MOCK_EMBEDDING_DIM {
            let digest = Sha256::new()
                .chain_update(self.seed.to_le_bytes())
                .chain_update(block.to_le_bytes())
                .chain_update(normalized.as_bytes())
                .finalize();
            for chunk in digest.chunks_exact(4) {
                let raw = u32::from_le_bytes(chunk.try_into().unwrap());
                values.push(f64::from(raw) / f64::from(u32::MAX) * 2.0 - 1.0);
            }
            block += 1;
        }
        values.truncate(MOCK_EMBEDDING_DIM);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        EmbeddingVector::new(values.into_iter().map(|v| v / norm).collect())
    }
}

#[async_trait]
impl EmbeddingProvider for MockEmbedder {
    async fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        check_embed_inputs(texts)?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.texts.fetch_add(texts.len(), Ordering::SeqCst);
        Ok(texts.iter().map(|t| self.vector_for(t)).collect())
    }
}

/// Serves search results from a fixture map keyed by exact query string.
pub struct MockSearch {
    results: BTreeMap<String, Vec<RawHit>>,
    log: Mutex<Vec<(String, usize)>>,
}

impl MockSearch {
    pub fn new(results: BTreeMap<String, Vec<RawHit>>) -> Self {
        Self { results, log: Mutex::new(Vec::new()) }
    }

    pub fn from_fixtures(set: &FixtureSet) -> Self {
        Self::new(set.search.clone())
    }

    /// `(query, n)` for every search issued so far.
    pub fn queries(&self) -> Vec<(String, usize)> {
        self.log.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        self.log.lock().unwrap().len()
    }
}

#[async_trait]
impl SearchProvider for MockSearch {
    async fn search(&self, query: &str, n: usize) -> Result<Vec<SearchResult>, ProviderError> {
        check_search_args(query, n)?;
        self.log.lock().unwrap().push((query.to_string(), n));
        let hits = self.results.get(query).cloned().unwrap_or_default();
        Ok(finalize_results(hits, n))
    }
}

//! End-to-end probe: validate, generate questions, then for every question
//! search, ingest, retrieve and answer. Question pipelines run concurrently
//! and fail independently of each other.

use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::future::join_all;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;

use crate::answer::{AttributedAnswer, fit_context_to_budget, generate_answer};
use crate::config::{ApiKeys, ConfigError, ConfigSnapshot, PipelineConfig, ProviderMode};
use crate::ingest::{FixtureFetcher, HttpFetcher, PageFetcher, ingest_result, usable_documents};
use crate::providers::bing::{BingConfig, BingSearch, SearchOptions};
use crate::providers::fixtures::FixtureSet;
use crate::providers::mock::{MockChat, MockEmbedder, MockSearch};
use crate::providers::openai::{OpenAiChat, OpenAiConfig, OpenAiEmbedder};
use crate::providers::{ChatProvider, EmbeddingProvider, ProviderError, SearchProvider};
use crate::questions::{LateralQuestion, QuestionError, ValidationError, generate_questions, validate_input};
use crate::retrieval::{DocContext, RetrievalError, select_context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Validation,
    QuestionGeneration,
    Retrieval,
    AnswerGeneration,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Validation => "validation",
            Stage::QuestionGeneration => "question-generation",
            Stage::Retrieval => "retrieval",
            Stage::AnswerGeneration => "answer-generation",
        }
    }
}

fn provider_code(err: &ProviderError) -> &'static str {
    match err {
        ProviderError::Unreachable(_) => "provider-unavailable",
        ProviderError::Refused(_) => "provider-refused",
        ProviderError::InvalidRequest(_) => "invalid-request",
        ProviderError::DimensionMismatch { .. } | ProviderError::BadResponse(_) => "provider-error",
    }
}

/// A probe that failed as a whole.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("question generation failed: {0}")]
    QuestionGeneration(#[from] QuestionError),
}

impl ProbeError {
    pub fn stage(&self) -> Stage {
        match self {
            ProbeError::Validation(_) => Stage::Validation,
            ProbeError::QuestionGeneration(_) => Stage::QuestionGeneration,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ProbeError::Validation(e) => e.code(),
            ProbeError::QuestionGeneration(QuestionError::Malformed(_)) => "malformed-llm-output",
            ProbeError::QuestionGeneration(QuestionError::Provider(e)) => provider_code(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub code: String,
    pub message: String,
}

impl StageFailure {
    fn new(stage: Stage, code: &str, message: impl Into<String>) -> Self {
        Self { stage, code: code.to_string(), message: message.into() }
    }

    fn retrieval(err: &RetrievalError) -> Self {
        let code = match err {
            RetrievalError::Provider(e) => provider_code(e),
            RetrievalError::Similarity(_) => "embedding-error",
            RetrievalError::EmptyContext => "empty-context",
        };
        Self::new(Stage::Retrieval, code, err.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Answer(AttributedAnswer),
    Failure(StageFailure),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeItem {
    pub question: LateralQuestion,
    #[serde(flatten)]
    pub outcome: Outcome,
}

impl ProbeItem {
    pub fn answer(&self) -> Option<&AttributedAnswer> {
        match &self.outcome {
            Outcome::Answer(a) => Some(a),
            Outcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&StageFailure> {
        match &self.outcome {
            Outcome::Failure(f) => Some(f),
            Outcome::Answer(_) => None,
        }
    }
}

/// Wall-clock milliseconds per stage. Per-question stages are summed over
/// all questions, so they can exceed `total_ms`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeTiming {
    pub validation_ms: f64,
    pub question_generation_ms: f64,
    pub search_ms: f64,
    pub ingest_ms: f64,
    pub retrieval_ms: f64,
    pub answer_generation_ms: f64,
    pub total_ms: f64,
}

fn ms(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub input_echo_word_count: usize,
    pub items: Vec<ProbeItem>,
    pub timing: ProbeTiming,
    pub config_snapshot: ConfigSnapshot,
}

#[derive(Clone)]
pub struct Providers {
    pub chat: Arc<dyn ChatProvider>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub search: Arc<dyn SearchProvider>,
    pub fetcher: Arc<dyn PageFetcher>,
}

/// The mock provider set, kept concretely typed so tests can inspect call logs.
#[derive(Clone)]
pub struct MockProviders {
    pub chat: Arc<MockChat>,
    pub embedder: Arc<MockEmbedder>,
    pub search: Arc<MockSearch>,
    pub fetcher: Arc<FixtureFetcher>,
}

impl MockProviders {
    pub fn from_fixtures(set: &FixtureSet) -> Self {
        Self {
            chat: Arc::new(MockChat::from_fixtures(set)),
            embedder: Arc::new(MockEmbedder::new(set.embedding_seed)),
            search: Arc::new(MockSearch::from_fixtures(set)),
            fetcher: Arc::new(FixtureFetcher::new(set.pages.clone())),
        }
    }

    pub fn providers(&self) -> Providers {
        Providers {
            chat: self.chat.clone(),
            embedder: self.embedder.clone(),
            search: self.search.clone(),
            fetcher: self.fetcher.clone(),
        }
    }

    /// Calls received by all four mocks together.
    pub fn total_calls(&self) -> usize {
        self.chat.calls() + self.embedder.calls() + self.search.calls() + self.fetcher.calls()
    }
}

impl Providers {
    /// Builds the provider set selected by `cfg.provider`. Live mode needs
    /// every API key; mock mode loads `cfg.fixtures` or the bundled set.
    pub fn from_config(cfg: &PipelineConfig, keys: &ApiKeys) -> Result<Self, ConfigError> {
        match cfg.provider {
            ProviderMode::Mock => {
                let set = match &cfg.fixtures {
                    Some(path) => {
                        FixtureSet::load(path).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?
                    }
                    None => FixtureSet::demo(),
                };
                Ok(MockProviders::from_fixtures(&set).providers())
            }
            ProviderMode::Live => {
                let need = |key: &Option<String>, what: &str| {
                    key.clone().ok_or_else(|| ConfigError::Invalid(format!("live mode needs the {what} API key")))
                };
                let chat = OpenAiConfig::new(&cfg.chat_base_url, need(&keys.chat, "chat")?, &cfg.chat_model);
                let embed = OpenAiConfig::new(
                    cfg.embedding_base_url.as_deref().unwrap_or(&cfg.chat_base_url),
                    need(&keys.embedding, "embedding")?,
                    &cfg.embedding_model,
                );
                let mut search = BingConfig::new(&cfg.search_endpoint, need(&keys.search, "search")?);
                search.options = SearchOptions {
                    market: cfg.search_market.clone(),
                    freshness: cfg.search_freshness.clone(),
                    safe_search: cfg.search_safe_search.clone(),
                };
                Ok(Self {
                    chat: Arc::new(OpenAiChat::new(chat)),
                    embedder: Arc::new(OpenAiEmbedder::new(embed)),
                    search: Arc::new(BingSearch::new(search)),
                    fetcher: Arc::new(HttpFetcher::new(cfg.fetch_limits())),
                })
            }
        }
    }
}

#[derive(Default)]
struct QuestionTiming {
    search: Duration,
    ingest: Duration,
    retrieval: Duration,
    answer: Duration,
}

pub struct Pipeline {
    providers: Providers,
    cfg: PipelineConfig,
    fetch_slots: Arc<Semaphore>,
}

impl Pipeline {
    pub fn new(providers: Providers, cfg: PipelineConfig) -> Self {
        let fetch_slots = Arc::new(Semaphore::new(cfg.fetch_concurrency.max(1)));
        Self { providers, cfg, fetch_slots }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub async fn probe(&self, raw_text: &str) -> Result<ProbeResult, ProbeError> {
        let started = Instant::now();
        let input = validate_input(raw_text, self.cfg.max_input_words)?;
        let validation = started.elapsed();

        let t = Instant::now();
        let questions = generate_questions(self.providers.chat.as_ref(), &input, self.cfg.question_settings()).await?;
        let question_generation = t.elapsed();

        let answered = join_all(questions.iter().map(|q| self.answer_question(q))).await;

        let mut timing = ProbeTiming {
            validation_ms: ms(validation),
            question_generation_ms: ms(question_generation),
            ..ProbeTiming::default()
        };
        let mut items = Vec::with_capacity(questions.len());
        for (question, (outcome, qt)) in questions.into_iter().zip(answered) {
            timing.search_ms += ms(qt.search);
            timing.ingest_ms += ms(qt.ingest);
            timing.retrieval_ms += ms(qt.retrieval);
            timing.answer_generation_ms += ms(qt.answer);
            items.push(ProbeItem { question, outcome });
        }
        timing.total_ms = ms(started.elapsed());

        Ok(ProbeResult {
            input_echo_word_count: input.word_count(),
            items,
            timing,
            config_snapshot: self.cfg.snapshot(),
        })
    }

    async fn answer_question(&self, question: &LateralQuestion) -> (Outcome, QuestionTiming) {
        let mut timing = QuestionTiming::default();
        let outcome = match self.run_question(question, &mut timing).await {
            Ok(answer) => Outcome::Answer(answer),
            Err(failure) => {
                tracing::info!(question = question.index, code = %failure.code, "question failed");
                Outcome::Failure(failure)
            }
        };
        (outcome, timing)
    }

    async fn run_question(
        &self,
        question: &LateralQuestion,
        timing: &mut QuestionTiming,
    ) -> Result<AttributedAnswer, StageFailure> {
        let retrieval_cfg = self.cfg.retrieval();

        let t = Instant::now();
        let results = self
            .providers
            .search
            .search(&question.text, retrieval_cfg.results_per_question)
            .await
            .map_err(|e| StageFailure::new(Stage::Retrieval, provider_code(&e), e.to_string()))?;
        timing.search = t.elapsed();
        if results.is_empty() {
            return Err(StageFailure::new(Stage::Retrieval, "no-results", "search returned no results"));
        }

        let t = Instant::now();
        let fetches = results.iter().map(|result| async move {
            let _slot = self.fetch_slots.acquire().await.expect("fetch semaphore is never closed");
            ingest_result(self.providers.fetcher.as_ref(), result).await
        });
        let docs = usable_documents(join_all(fetches).await);
        timing.ingest = t.elapsed();
        if docs.is_empty() {
            return Err(StageFailure::new(Stage::Retrieval, "no-documents", "no search result could be fetched"));
        }

        let t = Instant::now();
        let context = select_context(self.providers.embedder.as_ref(), question, &docs, &retrieval_cfg)
            .await
            .map_err(|e| StageFailure::retrieval(&e))?;
        let context = renumber(context);
        let settings = self.cfg.answer_settings();
        let context =
            fit_context_to_budget(question, context, settings, self.cfg.context_token_budget).ok_or_else(|| {
                StageFailure::new(
                    Stage::Retrieval,
                    "context-budget-exceeded",
                    "the answer prompt does not fit the context budget",
                )
            })?;
        timing.retrieval = t.elapsed();

        let t = Instant::now();
        let answer =
            generate_answer(self.providers.chat.as_ref(), question, &context, settings, self.cfg.answer_word_limit)
                .await
                .map_err(|e| StageFailure::new(Stage::AnswerGeneration, provider_code(&e), e.to_string()))?;
        timing.answer = t.elapsed();
        Ok(answer)
    }
}

fn renumber(context: Vec<DocContext>) -> Vec<DocContext> {
    context.into_iter().enumerate().map(|(i, doc)| DocContext { doc_number: i + 1, ..doc }).collect()
}

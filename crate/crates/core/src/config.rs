//! Pipeline configuration: defaults, then an optional TOML file, then
//! `LATERAL_*` environment variables. API keys are read from the
//! environment only and never appear in [`PipelineConfig`].

use std::path::{Path, PathBuf};
use std::time::Duration;

use figment::Figment;
use figment::providers::{Env, Format, Serialized, Toml};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::DEFAULT_ANSWER_WORD_LIMIT;
use crate::ingest::{DEFAULT_SEGMENT_WIDTH, FetchLimits};
use crate::questions::{PromptSettings, QUESTION_COUNT};
use crate::retrieval::RetrievalConfig;

pub const ENV_PREFIX: &str = "LATERAL_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("loading configuration: {0}")]
    Load(#[from] Box<figment::Error>),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Mock,
    Live,
}

impl ProviderMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProviderMode::Mock => "mock",
            ProviderMode::Live => "live",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub max_input_words: usize,
    /// Fixed at 5; present so a config file can state it, never change it.
    pub question_count: usize,
    pub results_per_question: usize,
    pub segment_width: usize,
    pub k_segments_per_page: usize,
    pub question_temperature: f64,
    pub answer_temperature: f64,
    pub question_max_tokens: u32,
    pub answer_max_tokens: u32,
    pub answer_word_limit: usize,
    pub context_token_budget: usize,
    pub fetch_timeout_seconds: u64,
    pub fetch_max_bytes: usize,
    pub fetch_max_redirects: usize,
    pub fetch_concurrency: usize,

    pub provider: ProviderMode,
    /// Mock fixture file; the bundled demo fixtures are used when unset.
    pub fixtures: Option<PathBuf>,
    pub feedback_path: PathBuf,

    pub chat_base_url: String,
    pub chat_model: String,
    pub embedding_base_url: Option<String>,
    pub embedding_model: String,
    pub search_endpoint: String,
    pub search_market: Option<String>,
    pub search_freshness: Option<String>,
    pub search_safe_search: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_input_words: 2000,
            question_count: QUESTION_COUNT,
            results_per_question: 3,
            segment_width: DEFAULT_SEGMENT_WIDTH,
            k_segments_per_page: 2,
            question_temperature: 0.2,
            answer_temperature: 0.2,
            question_max_tokens: 1024,
            answer_max_tokens: 1024,
            answer_word_limit: DEFAULT_ANSWER_WORD_LIMIT,
            context_token_budget: 4096,
            fetch_timeout_seconds: 10,
            fetch_max_bytes: 5 * 1024 * 1024,
            fetch_max_redirects: 5,
            fetch_concurrency: 6,
            provider: ProviderMode::Mock,
            fixtures: None,
            feedback_path: PathBuf::from("feedback.jsonl"),
            chat_base_url: crate::providers::openai::DEFAULT_BASE_URL.to_string(),
            chat_model: crate::providers::openai::DEFAULT_CHAT_MODEL.to_string(),
            embedding_base_url: None,
            embedding_model: crate::providers::openai::DEFAULT_EMBEDDING_MODEL.to_string(),
            search_endpoint: crate::providers::bing::DEFAULT_ENDPOINT.to_string(),
            search_market: None,
            search_freshness: None,
            search_safe_search: None,
        }
    }
}

impl PipelineConfig {
    /// Layers defaults, `file` (if any) and the process environment.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        Self::from_figment(Self::figment(file).merge(Env::prefixed(ENV_PREFIX)))
    }

    /// Layers defaults and `file` only, ignoring the environment.
    pub fn load_file(file: &Path) -> Result<Self, ConfigError> {
        Self::from_figment(Self::figment(Some(file)))
    }

    fn figment(file: Option<&Path>) -> Figment {
        let mut figment = Figment::from(Serialized::defaults(Self::default()));
        if let Some(path) = file {
            figment = figment.merge(Toml::file_exact(path));
        }
        figment
    }

    fn from_figment(figment: Figment) -> Result<Self, ConfigError> {
        let cfg: Self = figment.extract().map_err(Box::new)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("max_input_words", self.max_input_words),
            ("results_per_question", self.results_per_question),
            ("segment_width", self.segment_width),
            ("k_segments_per_page", self.k_segments_per_page),
            ("answer_word_limit", self.answer_word_limit),
            ("context_token_budget", self.context_token_budget),
            ("fetch_max_bytes", self.fetch_max_bytes),
            ("fetch_concurrency", self.fetch_concurrency),
            ("fetch_timeout_seconds", self.fetch_timeout_seconds as usize),
            ("question_max_tokens", self.question_max_tokens as usize),
            ("answer_max_tokens", self.answer_max_tokens as usize),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
        }
        for (name, t) in
            [("question_temperature", self.question_temperature), ("answer_temperature", self.answer_temperature)]
        {
            if !(0.0..=2.0).contains(&t) {
                return Err(ConfigError::Invalid(format!("{name} must be within [0, 2], got {t}")));
            }
        }
        if self.question_count != QUESTION_COUNT {
            return Err(ConfigError::Invalid(format!(
                "question_count is fixed at {QUESTION_COUNT}, got {}",
                self.question_count
            )));
        }
        Ok(())
    }

    pub fn retrieval(&self) -> RetrievalConfig {
        RetrievalConfig {
            k_segments_per_page: self.k_segments_per_page,
            results_per_question: self.results_per_question,
            segment_width: self.segment_width,
        }
    }

    pub fn fetch_limits(&self) -> FetchLimits {
        FetchLimits {
            timeout: Duration::from_secs(self.fetch_timeout_seconds),
            max_bytes: self.fetch_max_bytes,
            max_redirects: self.fetch_max_redirects,
        }
    }

    pub fn question_settings(&self) -> PromptSettings {
        PromptSettings { temperature: self.question_temperature, max_output_tokens: self.question_max_tokens }
    }

    pub fn answer_settings(&self) -> PromptSettings {
        PromptSettings { temperature: self.answer_temperature, max_output_tokens: self.answer_max_tokens }
    }

    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            retrieval: self.retrieval(),
            question_count: self.question_count,
            max_input_words: self.max_input_words,
            question_temperature: self.question_temperature,
            answer_temperature: self.answer_temperature,
            answer_word_limit: self.answer_word_limit,
            context_token_budget: self.context_token_budget,
        }
    }
}

/// The settings that shaped one probe, echoed back in its result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub retrieval: RetrievalConfig,
    pub question_count: usize,
    pub max_input_words: usize,
    pub question_temperature: f64,
    pub answer_temperature: f64,
    pub answer_word_limit: usize,
    pub context_token_budget: usize,
}

/// Credentials for live providers, read from the environment.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct ApiKeys {
    pub chat: Option<String>,
    pub embedding: Option<String>,
    pub search: Option<String>,
}

impl std::fmt::Debug for ApiKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mask = |k: &Option<String>| if k.is_some() { "<set>" } else { "<unset>" };
        f.debug_struct("ApiKeys")
            .field("chat", &mask(&self.chat))
            .field("embedding", &mask(&self.embedding))
            .field("search", &mask(&self.search))
            .finish()
    }
}

impl ApiKeys {
    pub fn from_env() -> Self {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        let chat = var("LATERAL_CHAT_API_KEY").or_else(|| var("OPENAI_API_KEY"));
        let embedding = var("LATERAL_EMBEDDING_API_KEY").or_else(|| chat.clone());
        let search = var("LATERAL_SEARCH_API_KEY").or_else(|| var("BING_SEARCH_KEY"));
        Self { chat, embedding, search }
    }
}

//! OpenAI-compatible chat-completion and embedding clients.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{
    ChatMessage, ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, EmbeddingVector, FinishReason,
    ProviderError, RETRY_DELAY, check_dimensions, check_embed_inputs, classify_status, transport_error, with_retry,
};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_CHAT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-3-small";

#[derive(Debug, Clone)]
pub struct OpenAiConfig {
    pub base_url: String,
    pub api_key: String,
    pub model: String,
    pub timeout: Duration,
    pub retry_delay: Duration,
}

impl OpenAiConfig {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: model.into(),
            timeout: Duration::from_secs(120),
            retry_delay: RETRY_DELAY,
        }
    }
}

fn http_client(timeout: Duration) -> reqwest::Client {
    reqwest::Client::builder().timeout(timeout).build().expect("reqwest client builds with static settings")
}

async fn post_json<B: Serialize, R: for<'de> Deserialize<'de>>(
    client: &reqwest::Client,
    cfg: &OpenAiConfig,
    path: &str,
    body: &B,
) -> Result<R, ProviderError> {
    let response = client
        .post(format!("{}/{path}", cfg.base_url))
        .bearer_auth(&cfg.api_key)
        .json(body)
        .send()
        .await
        .map_err(transport_error)?;
    let status = response.status();
    if !status.is_success() {
        let body = response.text().await.unwrap_or_default();
        return Err(classify_status(status, &body));
    }
    response.json::<R>().await.map_err(|e| ProviderError::BadResponse(e.to_string()))
}

pub struct OpenAiChat {
    cfg: OpenAiConfig,
    client: reqwest::Client,
}

impl OpenAiChat {
    pub fn new(cfg: OpenAiConfig) -> Self {
        let client = http_client(cfg.timeout);
        Self { cfg, client }
    }
}

#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

#[async_trait]
impl ChatProvider for OpenAiChat {
    async fn chat_complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        let body = ChatBody {
            model: &self.cfg.model,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_output_tokens,
        };
        let reply: ChatReply =
            with_retry(self.cfg.retry_delay, || post_json(&self.client, &self.cfg, "chat/completions", &body)).await?;
        let choice = reply
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::BadResponse("no choices in completion".into()))?;
        let content = choice.message.content.unwrap_or_default().trim().to_string();
        let finish_reason = match choice.finish_reason.as_deref() {
            _ if content.is_empty() => FinishReason::Error,
            Some("length") => FinishReason::Truncated,
            Some("stop") | None => FinishReason::Complete,
            Some(_) => FinishReason::Error,
        };
        Ok(ChatResponse { content, finish_reason })
    }
}

pub struct OpenAiEmbedder {
    cfg: OpenAiConfig,
    client: reqwest::Client,
}

impl OpenAiEmbedder {
    pub fn new(cfg: OpenAiConfig) -> Self {
        let client = http_client(cfg.timeout);
        Self { cfg, client }
    }
}

#[derive(Serialize)]
struct EmbedBody<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbedReply {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    index: usize,
    embedding: Vec<f64>,
}

#[async_trait]
impl EmbeddingProvider for OpenAiEmbedder {
    async fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        check_embed_inputs(texts)?;
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = EmbedBody { model: &self.cfg.model, input: texts };
        let mut reply: EmbedReply =
            with_retry(self.cfg.retry_delay, || post_json(&self.client, &self.cfg, "embeddings", &body)).await?;
        if reply.data.len() != texts.len() {
            return Err(ProviderError::BadResponse(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                reply.data.len()
            )));
        }
        reply.data.sort_by_key(|d| d.index);
        if reply.data.iter().enumerate().any(|(i, d)| d.index != i) {
            return Err(ProviderError::BadResponse("embedding indices are not 0..n".into()));
        }
        let vectors: Vec<_> = reply.data.into_iter().map(|d| EmbeddingVector::new(d.embedding)).collect();
        check_dimensions(&vectors)?;
        Ok(vectors)
    }
}

//! Question generation: input validation, the question prompt, and parsing
//! of the five labelled questions out of the model reply.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{ChatMessage, ChatProvider, ChatRequest, ProviderError};
use crate::text::{collapse_whitespace, count_words};

/// Number of questions generated per probe. Not configurable.
pub const QUESTION_COUNT: usize = 5;

pub const QUESTION_SYSTEM_PROMPT: &str = "You are a factual and helpful assistant to aid users in the lateral reading task. You will receive a segment of text (Text:), and you need to raise five important, insightful, diverse, simple, factoid questions that may arise to a user when reading the text but are not answered by the text (Question1:, Question2:, Question3:, Question4:, Question5:). The questions should be suitable as meaningful queries to a search engine like Bing. Your questions will motivate users to search for relevant documents to better determine whether the given text contains misinformation.";

const USER_PREFIX: &str = "Text: ";

const USER_CLOSING: &str = "\nCarefully choose insightful and atomic lateral reading questions not answered by the above text, ensuring that the queries are self-sufficient (Do not have pronouns or attributes relying on the text, they should be fully resolved and make complete sense independently).";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("input text is empty")]
    EmptyInput,
    #[error("input has {words} words, the limit is {limit}")]
    InputTooLong { words: usize, limit: usize },
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::EmptyInput => "empty-input",
            ValidationError::InputTooLong { .. } => "input-too-long",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeInput {
    text: String,
    word_count: usize,
}

impl ProbeInput {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn word_count(&self) -> usize {
        self.word_count
    }
}

pub fn validate_input(raw: &str, max_input_words: usize) -> Result<ProbeInput, ValidationError> {
    let words = count_words(raw);
    if words == 0 {
        return Err(ValidationError::EmptyInput);
    }
    if words > max_input_words {
        return Err(ValidationError::InputTooLong { words, limit: max_input_words });
    }
    Ok(ProbeInput { text: raw.to_string(), word_count: words })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LateralQuestion {
    pub index: usize,
    pub text: String,
}

/// Sampling settings for one chat call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromptSettings {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

pub fn build_question_prompt(input: &ProbeInput, settings: PromptSettings) -> ChatRequest {
    let user = format!("{USER_PREFIX}{}{USER_CLOSING}", input.text());
    ChatRequest {
        messages: vec![ChatMessage::system(QUESTION_SYSTEM_PROMPT), ChatMessage::user(user)],
        temperature: settings.temperature,
        max_output_tokens: settings.max_output_tokens,
    }
}

/// Recovers the user text substituted into a question prompt's user message.
pub fn input_from_user_message(message: &str) -> Option<&str> {
    message.strip_prefix(USER_PREFIX)?.strip_suffix(USER_CLOSING)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed model output: {0}")]
pub struct MalformedResponse(pub String);

static LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:^|[^a-z0-9])(question\s*([1-5])\s*[*_]*\s*:)").unwrap());
static DECORATION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[\s*_#>\-•]*(?:\d{1,2}[.)])?[\s*_#>\-•]*$").unwrap());
static TRAILING_MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s(?:\d{1,2}[.)]|[-•])$").unwrap());

const DECORATION: &[char] = &['*', '_', '#', '>', '`'];

fn clean_span(span: &str) -> String {
    let lines: Vec<&str> = span.lines().map(str::trim).collect();
    let first = lines.iter().position(|l| !DECORATION_LINE.is_match(l));
    let last = lines.iter().rposition(|l| !DECORATION_LINE.is_match(l));
    let (Some(first), Some(last)) = (first, last) else {
        return String::new();
    };
    let mut text = collapse_whitespace(&lines[first..=last].join(" "));
    loop {
        let trimmed = text.trim_end_matches(|c: char| c.is_whitespace() || DECORATION.contains(&c));
        let trimmed = match TRAILING_MARKER.find(trimmed) {
            Some(m) => &trimmed[..m.start()],
            None => trimmed,
        };
        if trimmed.len() == text.len() {
            break;
        }
        text = trimmed.to_string();
    }
    text.trim_start_matches(|c: char| c.is_whitespace() || DECORATION.contains(&c) || c == ':').to_string()
}

/// Extracts exactly five questions labelled `Question1:`..`Question5:`.
///
/// Labels are matched case-insensitively and may be wrapped in markdown
/// emphasis or preceded by list markers. Each question runs from its label
/// to the next label or the end of the text.
pub fn parse_questions(raw: &str) -> Result<Vec<LateralQuestion>, MalformedResponse> {
    let labels: Vec<_> = LABEL.captures_iter(raw).collect();
    let mut slots: [Option<String>; QUESTION_COUNT] = Default::default();
    for (i, caps) in labels.iter().enumerate() {
        let whole = caps.get(1).unwrap();
        let index: usize = caps[2].parse().unwrap();
        let end = labels.get(i + 1).map_or(raw.len(), |next| next.get(1).unwrap().start());
        let text = clean_span(&raw[whole.end()..end]);
        if text.is_empty() {
            return Err(MalformedResponse(format!("Question{index} has no text")));
        }
        let slot = &mut slots[index - 1];
        if slot.is_some() {
            return Err(MalformedResponse(format!("duplicate label Question{index}")));
        }
        *slot = Some(text);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            text.map(|text| LateralQuestion { index: i + 1, text })
                .ok_or_else(|| MalformedResponse(format!("missing label Question{}", i + 1)))
        })
        .collect()
}

/// Renders questions in the canonical `QuestionN: text` format.
pub fn format_questions(questions: &[LateralQuestion]) -> String {
    questions.iter().map(|q| format!("Question{}: {}", q.index, q.text)).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuestionError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Malformed(#[from] MalformedResponse),
}

/// Prompts the chat provider and parses its reply, re-asking once with the
/// same prompt if the first reply does not parse.
pub async fn generate_questions(
    chat: &dyn ChatProvider,
    input: &ProbeInput,
    settings: PromptSettings,
) -> Result<Vec<LateralQuestion>, QuestionError> {
    let request = build_question_prompt(input, settings);
    let first = chat.chat_complete(&request).await?;
    match parse_questions(&first.content) {
        Ok(questions) => Ok(questions),
        Err(err) => {
            tracing::warn!(%err, "question reply did not parse, asking again");
            let second = chat.chat_complete(&request).await?;
            Ok(parse_questions(&second.content)?)
        }
    }
}

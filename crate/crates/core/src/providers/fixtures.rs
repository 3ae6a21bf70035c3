//! Mock fixture document: search results keyed by exact query, scripted chat
//! responses per prompt class, page bodies keyed by URL and the embedding seed.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RawHit;

pub const FIXTURE_SCHEMA: &str = "lateral-fixtures/v1";

/// The fixture set shipped with the crate, used when mock mode is selected
/// without an explicit fixture file.
pub const DEMO_FIXTURES: &str = include_str!("../../fixtures/demo.toml");

/// The example input the shipped fixtures were assembled for.
pub const DEMO_INPUT: &str = include_str!("../../fixtures/demo_input.txt");

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("reading fixture file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing fixture file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported fixture schema {found:?}, expected {FIXTURE_SCHEMA:?}")]
    Schema { found: String },
    #[error("invalid script entry: {0}")]
    Script(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptedFailure {
    Unreachable,
    Refused,
}

/// One scripted chat turn. Exactly one of `response` or `error` is set.
/// For answer generation, `question` pins the entry to one question text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ScriptedFailure>,
}

impl ScriptEntry {
    pub fn reply(text: impl Into<String>) -> Self {
        Self { question: None, response: Some(text.into()), error: None }
    }

    pub fn reply_to(question: impl Into<String>, text: impl Into<String>) -> Self {
        Self { question: Some(question.into()), response: Some(text.into()), error: None }
    }

    pub fn fail(kind: ScriptedFailure) -> Self {
        Self { question: None, response: None, error: Some(kind) }
    }

    fn check(&self) -> Result<(), FixtureError> {
        match (&self.response, &self.error) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(FixtureError::Script("each entry needs exactly one of `response` or `error`".into())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatScripts {
    #[serde(default)]
    pub question_generation: Vec<ScriptEntry>,
    #[serde(default)]
    pub answer_generation: Vec<ScriptEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSet {
    pub schema: String,
    #[serde(default)]
    pub embedding_seed: u64,
    #[serde(default)]
    pub search: BTreeMap<String, Vec<RawHit>>,
    #[serde(default)]
    pub chat: ChatScripts,
    #[serde(default)]
    pub pages: BTreeMap<String, String>,
}

impl FixtureSet {
    pub fn empty() -> Self {
        Self {
            schema: FIXTURE_SCHEMA.to_string(),
            embedding_seed: 0,
            search: BTreeMap::new(),
            chat: ChatScripts::default(),
            pages: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        let set: FixtureSet = toml::from_str(text)?;
        if set.schema != FIXTURE_SCHEMA {
            return Err(FixtureError::Schema { found: set.schema });
        }
        for entry in set.chat.question_generation.iter().chain(&set.chat.answer_generation) {
            entry.check()?;
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn demo() -> Self {
        Self::parse(DEMO_FIXTURES).expect("bundled fixtures are valid")
    }
}

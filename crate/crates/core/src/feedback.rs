//! Anonymous feedback store.
//!
//! One JSON object per line. A record holds the probed input text, the liked
//! question and a UTC timestamp, and nothing else: no user, session, address
//! or location fields exist in the schema.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::questions::QUESTION_COUNT;

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error("invalid feedback: {0}")]
    Invalid(String),
    #[error("feedback storage unavailable: {0}")]
    StorageUnavailable(#[from] std::io::Error),
    #[error("corrupt feedback record on line {line}: {source}")]
    Corrupt { line: usize, source: serde_json::Error },
}

/// A liked question. Parsing rejects any field outside these four.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackEvent {
    pub input_text: String,
    pub question_index: usize,
    pub question_text: String,
    pub timestamp: DateTime<Utc>,
}

impl FeedbackEvent {
    /// Stamps a like with the current time, truncated to whole seconds.
    pub fn now(input_text: String, question_index: usize, question_text: String) -> Self {
        Self { input_text, question_index, question_text, timestamp: Utc::now().trunc_subsecs(0) }
    }

    pub fn validate(&self) -> Result<(), FeedbackError> {
        if !(1..=QUESTION_COUNT).contains(&self.question_index) {
            return Err(FeedbackError::Invalid(format!(
                "question_index must be within 1..={QUESTION_COUNT}, got {}",
                self.question_index
            )));
        }
        if self.question_text.trim().is_empty() {
            return Err(FeedbackError::Invalid("question_text must not be empty".into()));
        }
        Ok(())
    }
}

pub struct FeedbackStore {
    path: PathBuf,
    writer: Mutex<()>,
}

impl FeedbackStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), writer: Mutex::new(()) }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record as a single whole-line write.
    pub fn append(&self, event: &FeedbackEvent) -> Result<(), FeedbackError> {
        event.validate()?;
        let mut line = serde_json::to_string(event).expect("feedback records always serialize");
        line.push('\n');
        let _guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    /// Reads back every record, rejecting any line outside the schema.
    pub fn read_all(&self) -> Result<Vec<FeedbackEvent>, FeedbackError> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        BufReader::new(file)
            .lines()
            .enumerate()
            .map(|(i, line)| {
                let line = line?;
                serde_json::from_str(&line).map_err(|source| FeedbackError::Corrupt { line: i + 1, source })
            })
            .collect()
    }
}

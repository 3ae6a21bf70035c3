//! Answer generation over the selected segments and validation of the
//! attributed answer that comes back.

pub mod citations;
pub mod prompt;
pub mod sentences;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use citations::{AnswerSentence, ParsedCitations, find_uncited_docs, parse_citations, strip_markers};
pub use prompt::{ANSWER_SYSTEM_PROMPT, build_answer_prompt, estimate_prompt_tokens, fit_context_to_budget};
pub use sentences::split_sentences;

use crate::providers::{ChatProvider, ProviderError};
use crate::questions::{LateralQuestion, PromptSettings};
use crate::retrieval::DocContext;
use crate::text::count_words;

pub const DEFAULT_ANSWER_WORD_LIMIT: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub doc_number: usize,
    pub url: String,
    pub title: String,
    pub cited: bool,
}

/// Soft-contract violations. None of these reject the answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerFlags {
    pub overlength: bool,
    pub unattributed_sentences: usize,
    pub uncited_sources: Vec<usize>,
    pub out_of_range_citations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributedAnswer {
    pub question_index: usize,
    pub raw_text: String,
    pub sentences: Vec<AnswerSentence>,
    pub sources: Vec<Source>,
    pub word_count: usize,
    pub flags: AnswerFlags,
}

impl AttributedAnswer {
    pub fn unattributed_sentence_count(&self) -> usize {
        self.flags.unattributed_sentences
    }

    /// Assembles an answer from a raw model reply over numbered sources.
    pub fn from_reply(
        question_index: usize,
        raw_text: String,
        sources: &[(usize, String, String)],
        word_limit: usize,
    ) -> Self {
        let num_docs = sources.len();
        let ParsedCitations { sentences, out_of_range } = parse_citations(&raw_text, num_docs);
        let uncited: BTreeSet<usize> = find_uncited_docs(&sentences, num_docs);
        let word_count = count_words(&raw_text);
        let flags = AnswerFlags {
            overlength: word_count > word_limit,
            unattributed_sentences: sentences.iter().filter(|s| s.citations.is_empty()).count(),
            uncited_sources: uncited.iter().copied().collect(),
            out_of_range_citations: out_of_range.into_iter().collect(),
        };
        let sources = sources
            .iter()
            .map(|(doc_number, url, title)| Source {
                doc_number: *doc_number,
                url: url.clone(),
                title: title.clone(),
                cited: !uncited.contains(doc_number),
            })
            .collect();
        Self { question_index, raw_text, sentences, sources, word_count, flags }
    }
}

/// Prompts for an answer over `context` (documents numbered contiguously
/// from 1) and parses the citations out of the reply.
pub async fn generate_answer(
    chat: &dyn ChatProvider,
    question: &LateralQuestion,
    context: &[DocContext],
    settings: PromptSettings,
    word_limit: usize,
) -> Result<AttributedAnswer, ProviderError> {
    if context.is_empty() {
        return Err(ProviderError::InvalidRequest("answer context must not be empty".into()));
    }
    debug_assert!(context.iter().enumerate().all(|(i, d)| d.doc_number == i + 1));
    let request = build_answer_prompt(question, context, settings);
    let reply = chat.chat_complete(&request).await?;
    let sources: Vec<_> = context.iter().map(|d| (d.doc_number, d.url.clone(), d.title.clone())).collect();
    Ok(AttributedAnswer::from_reply(question.index, reply.content, &sources, word_limit))
}

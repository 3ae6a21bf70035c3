//! The answer prompt and the context-size guard.

use crate::providers::{ChatMessage, ChatRequest};
use crate::questions::{LateralQuestion, PromptSettings};
use crate::retrieval::DocContext;
use crate::text::count_words;

pub const ANSWER_SYSTEM_PROMPT: &str = "You are a factual and helpful assistant designed to read and cohesively summarize segments from different relevant document sources to answer the question at hand. Your answer should be informative but no more than 100 words. Your answer should be concise, easy to understand and should only use information from the provided relevant segments but combine the search results into a coherent answer. Do not repeat text and do not include irrelevant text in your answers. Use an unbiased and journalistic tone. Make sure the output is in plaintext. Attribute each sentence with proper citations using the document number with the [${doc_number}] notation (Example: \"Hydroxychloroquine is not a cure for COVID-19 [1][3].\"). Ensure each sentence in the answer is properly attributed. Ensure each of the documents is cited at least once. If different results refer to different entities with the same name, cite them separately.";

const USER_PREFIX: &str = "My question is ";
const USER_MIDDLE: &str = ". Cohesively and factually summarize the following documents to answer my question.\n\n";

pub fn render_user_message(question: &str, doc_texts: &str) -> String {
    format!("{USER_PREFIX}{question}{USER_MIDDLE}{doc_texts}")
}

/// Recovers the question substituted into an answer prompt's user message.
pub fn question_from_user_message(message: &str) -> Option<&str> {
    let rest = message.strip_prefix(USER_PREFIX)?;
    rest.find(USER_MIDDLE).map(|end| &rest[..end])
}

/// Renders every document as a `Document [d] (URL):` header line followed by
/// its selected segments separated by blank lines.
pub fn render_doc_texts(context: &[DocContext]) -> String {
    context
        .iter()
        .map(|doc| {
            let body: Vec<&str> = doc.segments.iter().map(|s| s.segment.text.as_str()).collect();
            format!("Document [{}] ({}):\n{}", doc.doc_number, doc.url, body.join("\n\n"))
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn build_answer_prompt(
    question: &LateralQuestion,
    context: &[DocContext],
    settings: PromptSettings,
) -> ChatRequest {
    ChatRequest {
        messages: vec![
            ChatMessage::system(ANSWER_SYSTEM_PROMPT),
            ChatMessage::user(render_user_message(&question.text, &render_doc_texts(context))),
        ],
        temperature: settings.temperature,
        max_output_tokens: settings.max_output_tokens,
    }
}

/// Conservative token estimate: words × 4/3, rounded up, over all messages.
pub fn estimate_prompt_tokens(request: &ChatRequest) -> usize {
    let words: usize = request.messages.iter().map(|m| count_words(&m.content)).sum();
    (words * 4).div_ceil(3)
}

/// Drops the lowest-scoring selected segments until the rendered prompt fits
/// `budget` estimated tokens. Documents keep at least one segment for as long
/// as any document still has two; documents left empty are removed and the
/// rest renumbered from 1. Returns `None` if nothing fits.
pub fn fit_context_to_budget(
    question: &LateralQuestion,
    mut context: Vec<DocContext>,
    settings: PromptSettings,
    budget: usize,
) -> Option<Vec<DocContext>> {
    loop {
        if context.is_empty() {
            return None;
        }
        if estimate_prompt_tokens(&build_answer_prompt(question, &context, settings)) <= budget {
            return Some(context);
        }
        let any_multi = context.iter().any(|d| d.segments.len() > 1);
        let victim = context
            .iter()
            .enumerate()
            .filter(|(_, d)| !any_multi || d.segments.len() > 1)
            .flat_map(|(di, d)| d.segments.iter().enumerate().map(move |(si, s)| (di, si, s.score)))
            // lowest score loses; among equals the later position goes first
            .min_by(|a, b| a.2.total_cmp(&b.2).then((b.0, b.1).cmp(&(a.0, a.1))));
        let (di, si, _) = victim?;
        context[di].segments.remove(si);
        if context[di].segments.is_empty() {
            context.remove(di);
            for (i, doc) in context.iter_mut().enumerate() {
                doc.doc_number = i + 1;
            }
        }
    }
}

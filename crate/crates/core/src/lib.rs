//! Lateral-reading assistant.
//!
//! Given a piece of text, [`pipeline::Pipeline::probe`] generates five
//! questions about it, searches the web for each, picks the most relevant
//! segments of the top pages and asks a chat model for a short answer with
//! `[n]` citations back to those pages.

pub mod answer;
pub mod config;
pub mod feedback;
pub mod ingest;
pub mod pipeline;
pub mod providers;
pub mod questions;
pub mod retrieval;
pub mod server;
pub mod text;

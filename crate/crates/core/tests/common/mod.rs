#![allow(dead_code)]

use std::net::SocketAddr;

use axum::Router;

/// Serves `app` on an ephemeral local port and returns its base URL.
pub async fn spawn(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    format!("http://{addr}")
}

/// One `Document [d] (URL):` block of a rendered answer prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptDoc {
    pub number: usize,
    pub url: String,
    pub segments: Vec<String>,
}

/// Reads the documents back out of an answer prompt's user message. Segment
/// texts never contain newlines, so every non-empty line under a header is
/// one segment.
pub fn prompt_documents(user: &str) -> Vec<PromptDoc> {
    let marker = "to answer my question.\n\n";
    let body = &user[user.find(marker).expect("answer prompt") + marker.len()..];
    let mut docs: Vec<PromptDoc> = Vec::new();
    for line in body.lines() {
        if let Some(rest) = line.strip_prefix("Document [") {
            let (num, rest) = rest.split_once("] (").expect("header");
            let url = rest.strip_suffix("):").expect("header end");
            docs.push(PromptDoc { number: num.parse().unwrap(), url: url.to_string(), segments: Vec::new() });
        } else if !line.is_empty() {
            docs.last_mut().expect("segment before header").segments.push(line.to_string());
        }
    }
    docs
}

/// A probe result with the timing block removed, serialized.
pub fn without_timing(result: &lateral::pipeline::ProbeResult) -> String {
    let mut value = serde_json::to_value(result).unwrap();
    value.as_object_mut().unwrap().remove("timing");
    serde_json::to_string(&value).unwrap()
}

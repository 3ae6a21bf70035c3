//! HTTP API: `GET /health`, `POST /probe`, `POST /feedback`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::Router;
use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use serde::Deserialize;
use serde::de::DeserializeOwned;
use serde_json::{Value, json};

use crate::config::ProviderMode;
use crate::feedback::{FeedbackError, FeedbackEvent, FeedbackStore};
use crate::pipeline::{Pipeline, ProbeError, Stage};
use crate::providers::ProviderError;
use crate::questions::QuestionError;

#[derive(Clone)]
pub struct AppState {
    pub pipeline: Arc<Pipeline>,
    pub feedback: Arc<FeedbackStore>,
    pub provider_mode: ProviderMode,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    stage: Option<Stage>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, code: code.to_string(), message: message.into(), stage: None }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid-request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(stage) = self.stage {
            error["stage"] = serde_json::to_value(stage).expect("stage serializes");
        }
        (self.status, axum::Json(json!({ "error": error }))).into_response()
    }
}

impl From<ProbeError> for ApiError {
    fn from(err: ProbeError) -> Self {
        let status = match &err {
            ProbeError::Validation(_) => StatusCode::BAD_REQUEST,
            ProbeError::QuestionGeneration(QuestionError::Provider(ProviderError::Unreachable(_))) => {
                StatusCode::SERVICE_UNAVAILABLE
            }
            ProbeError::QuestionGeneration(_) => StatusCode::BAD_GATEWAY,
        };
        Self { status, code: err.code().to_string(), message: err.to_string(), stage: Some(err.stage()) }
    }
}

impl From<FeedbackError> for ApiError {
    fn from(err: FeedbackError) -> Self {
        match err {
            FeedbackError::Invalid(m) => Self::new(StatusCode::BAD_REQUEST, "invalid-feedback", m),
            other => {
                tracing::error!(error = %other, "feedback write failed");
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "storage-unavailable", other.to_string())
            }
        }
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON body: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeRequest {
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackRequest {
    input_text: String,
    question_index: usize,
    question_text: String,
}

async fn health(State(state): State<AppState>) -> axum::Json<Value> {
    axum::Json(json!({ "status": "ok", "provider_mode": state.provider_mode.as_str() }))
}

async fn probe(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: ProbeRequest = parse_body(&body)?;
    let result = state.pipeline.probe(&req.text).await?;
    Ok(axum::Json(result).into_response())
}

async fn feedback(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: FeedbackRequest = parse_body(&body)?;
    let event = FeedbackEvent::now(req.input_text, req.question_index, req.question_text);
    let store = state.feedback.clone();
    tokio::task::spawn_blocking(move || store.append(&event))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(axum::Json(json!({ "ok": true })).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/probe", post(probe))
        .route("/feedback", post(feedback))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, mode = state.provider_mode.as_str(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

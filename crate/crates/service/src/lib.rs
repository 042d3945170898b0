//! HTTP front end for the reward engine.
//!
//! - `POST /v1/score`: one [`ScoreRequest`] in, one [`ScoreResponse`] out.
//! - `POST /v1/score_batch`: an array in, an order-preserving array out;
//!   items that fail validation come back as `{"error": ...}` in place.
//! - `GET /healthz`: readiness and build identifiers.
//!
//! Handlers hold no mutable state beyond the readiness flag, so responses do
//! not depend on request order or concurrency.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pathreward_core::parser::OptionSet;
use pathreward_core::reward::{Extraction, GroundTruth, ImageDims, Scorer, TaskContext};
use pathreward_core::TaskKind;
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const NAME: &str = env!("CARGO_PKG_NAME");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub task: TaskKind,
    pub response: String,
    pub gt: GroundTruth,
    /// Overrides the server's format weight for this request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageDims>,
    /// Used to read lettered options when `options` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionSet>,
}

impl ScoreRequest {
    pub fn context(&self) -> TaskContext {
        let options = self.options.clone().or_else(|| self.prompt.as_deref().map(OptionSet::from_prompt));
        TaskContext { options, image: self.image }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub r_task: f64,
    pub r_format: f64,
    pub lambda: f64,
    pub total: f64,
    pub format_ok: bool,
    pub extracted: Extraction,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    Validation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::Malformed(_) => "malformed",
            ServiceError::Validation(_) => "validation",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Malformed(_) => StatusCode::BAD_REQUEST,
            ServiceError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn body(&self) -> ErrorBody {
        ErrorBody { error: ErrorDetail { kind: self.kind().to_string(), message: self.to_string() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if matches!(self, ServiceError::Internal(_)) {
            log::error!("{self}");
        }
        (self.status(), Json(self.body())).into_response()
    }
}

/// Score one request exactly as the in-process engine would.
pub fn handle_score(scorer: &Scorer, req: &ScoreRequest) -> Result<ScoreResponse, ServiceError> {
    let owned;
    let scorer = match req.lambda {
        Some(l) if l != scorer.config().lambda => {
            owned = scorer.with_lambda(l).map_err(|e| ServiceError::Validation(e.to_string()))?;
            &owned
        }
        _ => scorer,
    };
    let out = scorer.score_detailed(req.task, &req.response, &req.gt, &req.context()).map_err(|e| {
        if e.is_validation() {
            ServiceError::Validation(e.to_string())
        } else {
            ServiceError::Internal(e.to_string())
        }
    })?;
    let b = out.breakdown;
    Ok(ScoreResponse {
        r_task: b.r_task,
        r_format: b.r_format,
        lambda: b.lambda,
        total: b.total,
        format_ok: out.parsed.format_ok,
        extracted: out.extracted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub ready: bool,
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone)]
pub struct AppState {
    scorer: Scorer,
    ready: Arc<AtomicBool>,
}

impl AppState {
    pub fn new(scorer: Scorer) -> Self {
        Self { scorer, ready: Arc::new(AtomicBool::new(true)) }
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    /// Shared readiness flag; cleared when shutdown begins.
    pub fn readiness(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.ready)
    }
}

pub fn handle_health(ready: bool) -> HealthStatus {
    HealthStatus {
        status: if ready { "ok" } else { "shutting_down" }.to_string(),
        ready,
        name: NAME.to_string(),
        version: VERSION.to_string(),
    }
}

/// Item of a batch response: a score or an in-place error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchItem {
    Ok(ScoreResponse),
    Err(ErrorBody),
}

fn malformed(rej: JsonRejection) -> ServiceError {
    ServiceError::Malformed(rej.body_text())
}

async fn score(
    State(state): State<AppState>,
    body: Result<Json<ScoreRequest>, JsonRejection>,
) -> Result<Json<ScoreResponse>, ServiceError> {
    let Json(req) = body.map_err(malformed)?;
    handle_score(&state.scorer, &req).map(Json)
}

async fn score_batch(
    State(state): State<AppState>,
    body: Result<Json<Vec<serde_json::Value>>, JsonRejection>,
) -> Result<Json<Vec<BatchItem>>, ServiceError> {
    let Json(items) = body.map_err(malformed)?;
    let scorer = state.scorer.clone();
    let out = tokio::task::spawn_blocking(move || {
        items
            .into_iter()
            .map(|v| {
                let res = serde_json::from_value::<ScoreRequest>(v)
                    .map_err(|e| ServiceError::Malformed(e.to_string()))
                    .and_then(|req| handle_score(&scorer, &req));
                match res {
                    Ok(r) => BatchItem::Ok(r),
                    Err(e) => BatchItem::Err(e.body()),
                }
            })
            .collect::<Vec<_>>()
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))?;
    Ok(Json(out))
}

async fn health(State(state): State<AppState>) -> (StatusCode, Json<HealthStatus>) {
    let ready = state.ready.load(Ordering::SeqCst);
    let code = if ready { StatusCode::OK } else { StatusCode::SERVICE_UNAVAILABLE };
    (code, Json(handle_health(ready)))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/score", post(score))
        .route("/v1/score_batch", post(score_batch))
        .route("/healthz", get(health))
        .with_state(state)
}

/// Serve until `shutdown` resolves; readiness drops as soon as it does, and
/// in-flight requests are allowed to finish.
pub async fn serve<F>(listener: tokio::net::TcpListener, state: AppState, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    let ready = state.readiness();
    let app = router(state);
    if let Ok(addr) = listener.local_addr() {
        log::info!("listening on {addr}");
    }
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            shutdown.await;
            ready.store(false, Ordering::SeqCst);
            log::info!("shutting down");
        })
        .await
}

/// Bind `addr` and serve until Ctrl-C.
pub async fn run(addr: SocketAddr, scorer: Scorer) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve(listener, AppState::new(scorer), async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

//! HTTP front end of the pipeline: retrieve once, generate several
//! candidates, correct their citations, score them and answer with the best.
//!
//! `POST /ask` takes an [`AskRequest`] and returns an [`AskResponse`] or
//! `{"error": code}`. `GET /health` reports backend reachability.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use webglm_core::bootstrap::correct::correct_citations;
use webglm_core::bootstrap::llm::{generate_raw_answer, GenerationParams, LlmClient};
use webglm_core::bootstrap::BootstrapConfig;
use webglm_core::clock::Clock;
use webglm_core::config::Settings;
use webglm_core::error::{LlmError, RegistryError, RetrieveError};
use webglm_core::model::{render_answer, validate_citations};
use webglm_core::preference::scorer::{best_of_n, AnswerScorer};
use webglm_core::registry::BackendStatus;
use webglm_core::retriever::Retriever;
use webglm_core::{Answer, AnswerSegment, Question, Reference};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskRequest {
    pub question: String,
    #[serde(default)]
    pub n_candidates: Option<usize>,
    #[serde(default)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AskTimings {
    pub t_search: f64,
    pub t_fetch: f64,
    pub t_extract: f64,
    pub t_rank: f64,
    pub generate: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    /// Canonical markup of the chosen answer.
    pub answer: String,
    pub segments: Vec<AnswerSegment>,
    pub references: Vec<Reference>,
    /// One score per candidate, in generation order.
    pub scores: Vec<f64>,
    /// Index into `scores` of the returned candidate.
    pub chosen: usize,
    pub timings: AskTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReport {
    pub search: BackendStatus,
    pub llm: BackendStatus,
    pub scorer: BackendStatus,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AskError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("no references survived retrieval")]
    NoReferences,
    #[error("generation timed out")]
    GeneratorTimeout,
    #[error("generation failed: {0}")]
    GeneratorFailed(String),
}

impl AskError {
    pub fn status(&self) -> StatusCode {
        match self {
            AskError::EmptyQuestion | AskError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            AskError::SearchFailed(_) | AskError::GeneratorFailed(_) => StatusCode::BAD_GATEWAY,
            AskError::NoReferences => StatusCode::INTERNAL_SERVER_ERROR,
            AskError::GeneratorTimeout => StatusCode::GATEWAY_TIMEOUT,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            AskError::EmptyQuestion => "empty_question",
            AskError::InvalidRequest(_) => "invalid_request",
            AskError::SearchFailed(_) => "search_failed",
            AskError::NoReferences => "no_references",
            AskError::GeneratorTimeout => "generator_timeout",
            AskError::GeneratorFailed(_) => "generator_failed",
        }
    }
}

/// Append-only JSON-lines log, one line per answered or failed query.
pub struct QueryLog {
    file: Mutex<File>,
}

impl QueryLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, entry: &serde_json::Value) -> std::io::Result<()> {
        let mut line = entry.to_string();
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

pub struct AppState {
    pub retriever: Retriever,
    pub llm: Arc<dyn LlmClient>,
    pub scorer: Arc<dyn AnswerScorer>,
    /// Prompt layout, generation parameters and correction metric.
    pub bootstrap: BootstrapConfig,
    pub default_candidates: usize,
    pub clock: Arc<dyn Clock>,
    pub log: Option<QueryLog>,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("query log: {0}")]
    Log(#[from] std::io::Error),
}

impl AppState {
    pub fn from_settings(settings: &Settings) -> Result<Self, BuildError> {
        let log = match &settings.service.log_path {
            Some(p) => Some(QueryLog::open(p)?),
            None => None,
        };
        Ok(Self {
            retriever: settings.build_retriever()?,
            llm: settings.build_llm()?,
            scorer: settings.build_scorer()?,
            bootstrap: settings.bootstrap.clone(),
            default_candidates: settings.service.n_candidates,
            clock: settings.clock(),
            log,
        })
    }
}

pub fn parse_request(body: &[u8]) -> Result<AskRequest, AskError> {
    let req: AskRequest =
        serde_json::from_slice(body).map_err(|e| AskError::InvalidRequest(e.to_string()))?;
    if req.question.trim().is_empty() {
        return Err(AskError::EmptyQuestion);
    }
    if req.n_candidates == Some(0) || req.top_k == Some(0) {
        return Err(AskError::InvalidRequest(
            "n_candidates and top_k must be at least 1".into(),
        ));
    }
    Ok(req)
}

/// Runs the pipeline for one request. Any failed candidate fails the whole
/// request so the score list always has `n_candidates` entries.
pub async fn handle_ask(state: &AppState, req: &AskRequest) -> Result<AskResponse, AskError> {
    let question = Question::new("ask", req.question.trim()).map_err(|_| AskError::EmptyQuestion)?;
    let mut retriever = state.retriever.clone();
    if let Some(k) = req.top_k {
        retriever.config.top_k = k;
    }
    let (references, stage) = retriever.timed_retrieve(&question).await.map_err(|e| match e {
        RetrieveError::Search(s) => AskError::SearchFailed(s.to_string()),
        RetrieveError::NoParagraphs => AskError::NoReferences,
    })?;
    if references.is_empty() {
        return Err(AskError::NoReferences);
    }

    let n = req.n_candidates.unwrap_or(state.default_candidates).max(1);
    let spec = state.bootstrap.prompt_spec(&question, &references);
    let params: Vec<GenerationParams> = (1..=n as u64)
        .map(|seed| GenerationParams {
            seed,
            ..state.bootstrap.generation
        })
        .collect();
    let clock = &*state.clock;
    let start = clock.now();
    let raw: Vec<Result<String, LlmError>> = if state.llm.capabilities().concurrent {
        join_all(params.iter().map(|p| generate_raw_answer(&spec, &*state.llm, p))).await
    } else {
        let mut out = Vec::with_capacity(n);
        for p in &params {
            out.push(generate_raw_answer(&spec, &*state.llm, p).await);
        }
        out
    };
    let generate = clock.since(start);

    let filter = &state.bootstrap.filter;
    let mut candidates: Vec<Answer> = Vec::with_capacity(n);
    for r in raw {
        let text = r.map_err(|e| match e {
            LlmError::Timeout => AskError::GeneratorTimeout,
            other => AskError::GeneratorFailed(other.to_string()),
        })?;
        let fixed = correct_citations(
            &text,
            &references,
            filter.correction_metric,
            filter.correction_threshold,
        );
        candidates.push(fixed.corrected);
    }

    let start = clock.now();
    let (chosen, scores) = best_of_n(&question.text, &candidates, &*state.scorer)
        .map_err(|e| AskError::GeneratorFailed(e.to_string()))?;
    let score = clock.since(start);

    let answer = candidates.swap_remove(chosen);
    debug_assert!(validate_citations(&answer, references.len()).is_empty());
    Ok(AskResponse {
        answer: render_answer(&answer),
        segments: answer.segments,
        references,
        scores,
        chosen,
        timings: AskTimings {
            t_search: stage.t_search,
            t_fetch: stage.t_fetch,
            t_extract: stage.t_extract,
            t_rank: stage.t_rank,
            generate,
            score,
        },
    })
}

pub async fn health(state: &AppState) -> HealthReport {
    HealthReport {
        search: state.retriever.search.health().await,
        llm: state.llm.health().await,
        scorer: state.scorer.health(),
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn timestamp() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

async fn ask_route(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req = match parse_request(&body) {
        Ok(r) => r,
        Err(e) => {
            return json_response(e.status(), serde_json::json!({ "error": e.code() }).to_string())
        }
    };
    let outcome = handle_ask(&state, &req).await;
    let (status, payload, entry) = match &outcome {
        Ok(resp) => {
            let v = serde_json::to_value(resp).expect("response serializes");
            (StatusCode::OK, v.to_string(), serde_json::json!({ "response": v }))
        }
        Err(e) => {
            tracing::warn!(code = e.code(), "ask failed: {e}");
            let v = serde_json::json!({ "error": e.code() });
            let entry = serde_json::json!({ "error": { "code": e.code(), "message": e.to_string() } });
            (e.status(), v.to_string(), entry)
        }
    };
    if let Some(log) = &state.log {
        let mut entry = entry;
        entry["timestamp"] = timestamp().into();
        entry["request"] = serde_json::to_value(&req).expect("request serializes");
        if let Err(e) = log.append(&entry) {
            tracing::error!("query log write failed: {e}");
        }
    }
    json_response(status, payload)
}

async fn health_route(State(state): State<Arc<AppState>>) -> Response {
    let report = health(&state).await;
    json_response(
        StatusCode::OK,
        serde_json::to_string(&report).expect("health serializes"),
    )
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/ask", post(ask_route))
        .route("/health", get(health_route))
        .with_state(state)
}

/// Serves until the listener fails. The bound address is available from
/// `listener.local_addr()` before calling.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

//! Annotation service: hands out dual-annotation tasks, records labels in
//! an append-only store and reports agreement, disagreements and corpus
//! statistics. All routes live under `/v1`.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use dangspeech_core::agreement::{AdjudicationRecord, AgreementReport, LabelRecord, LabelStore, StoreRecord};
use dangspeech_core::corpus::{phenomena_stats, Corpus, PhenomenaTable};
use dangspeech_core::heuristics::{RuleStep, RuleVerdict};
use dangspeech_core::resources::Resources;
use dangspeech_core::textproc::{FeatureVector, SeedMatch};
use dangspeech_core::{Error as CoreError, Label};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const ANNOTATOR_HEADER: &str = "x-annotator-id";

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ApiError::NotFound(_) => "not_found",
            ApiError::Conflict(_) => "conflict",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Internal(_) => "internal",
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DuplicateLabel { .. } => ApiError::Conflict(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } });
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Shared state. Writes to the store are serialized by the lock.
pub struct AppState {
    resources: Arc<Resources>,
    corpus: Corpus,
    features: Vec<FeatureVector>,
    annotators: Vec<String>,
    store: RwLock<LabelStore>,
}

impl AppState {
    /// `annotators` lists the registered annotator ids; the first two are
    /// the pair agreement is reported for.
    pub fn new(
        resources: Arc<Resources>,
        corpus: Corpus,
        store: LabelStore,
        annotators: Vec<String>,
    ) -> Result<Self, CoreError> {
        if annotators.is_empty() {
            return Err(CoreError::Config("at least one annotator is required".into()));
        }
        let mut unique = annotators.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != annotators.len() {
            return Err(CoreError::Config("annotator ids must be unique".into()));
        }
        let features = corpus
            .tweets()
            .iter()
            .map(|t| resources.analyze(&t.text).features)
            .collect();
        Ok(AppState {
            resources,
            corpus,
            features,
            annotators,
            store: RwLock::new(store),
        })
    }

    fn store(&self) -> std::sync::RwLockReadGuard<'_, LabelStore> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    fn store_mut(&self) -> std::sync::RwLockWriteGuard<'_, LabelStore> {
        self.store.write().unwrap_or_else(|e| e.into_inner())
    }

    fn check_annotator(&self, id: &str) -> Result<(), ApiError> {
        if self.annotators.iter().any(|a| a == id) {
            Ok(())
        } else {
            Err(ApiError::NotFound(format!("unknown annotator `{id}`")))
        }
    }

    fn check_tweet(&self, id: &str) -> Result<(), ApiError> {
        match self.corpus.get(id) {
            Some(_) => Ok(()),
            None => Err(ApiError::NotFound(format!("unknown tweet `{id}`"))),
        }
    }

    fn agreement(&self, store: &LabelStore) -> AgreementReport {
        match self.annotators.as_slice() {
            [a, b, ..] => store.agreement(a, b),
            [a] => {
                let mut r = AgreementReport::new(vec![a.clone()], Default::default());
                r.reason = Some("agreement needs two registered annotators".into());
                r
            }
            [] => unreachable!("checked in AppState::new"),
        }
    }

    pub fn agreement_report(&self) -> AgreementReport {
        self.agreement(&self.store())
    }

    /// Copy of the store's record log.
    pub fn records(&self) -> Vec<StoreRecord> {
        self.store().records().to_vec()
    }

    /// Phenomena table over tweets with a gold label (adjudicated, or agreed
    /// by at least two annotators).
    pub fn phenomena(&self) -> Result<PhenomenaTable, CoreError> {
        let annotated = self.store().annotate(&self.corpus);
        phenomena_stats(&annotated, &self.features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Labeled,
    Adjudication,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub tweet_id: String,
    pub text: String,
    pub seed_spans: Vec<SeedMatch>,
    pub features: FeatureVector,
    /// Rule-engine suggestion; present iff the tweet has a seed.
    pub suggestion: Option<RuleVerdict>,
    pub annotator_id: String,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextTask {
    pub task: Option<AnnotationTask>,
    /// Tweets this annotator has not labeled yet.
    pub remaining: usize,
}

#[derive(Debug, Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

fn annotator_from(query: Option<String>, headers: &HeaderMap) -> Result<String, ApiError> {
    query
        .or_else(|| {
            headers
                .get(ANNOTATOR_HEADER)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        })
        .filter(|s| !s.is_empty())
        .ok_or_else(|| {
            ApiError::BadRequest(format!(
                "annotator id missing (query `annotator` or header `{ANNOTATOR_HEADER}`)"
            ))
        })
}

async fn next_task(
    State(state): State<Arc<AppState>>,
    query: Result<Query<AnnotatorQuery>, QueryRejection>,
    headers: HeaderMap,
) -> ApiResult<NextTask> {
    let annotator = annotator_from(query?.0.annotator, &headers)?;
    state.check_annotator(&annotator)?;
    let store = state.store();
    let mut pending = state
        .corpus
        .tweets()
        .iter()
        .filter(|t| store.label_of(&t.id, &annotator).is_none());
    let first = pending.next();
    let remaining = first.map_or(0, |_| 1 + pending.count());
    let task = first.map(|t| {
        let analysis = state.resources.analyze(&t.text);
        AnnotationTask {
            tweet_id: t.id.clone(),
            text: t.text.clone(),
            suggestion: state.resources.engine.judge_analysis(&analysis).ok(),
            seed_spans: analysis.matches,
            features: analysis.features,
            annotator_id: annotator.clone(),
            status: TaskStatus::Pending,
        }
    });
    Ok(Json(NextTask { task, remaining }))
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    tweet_id: String,
    label: Label,
    #[serde(default)]
    annotator_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelAck {
    pub accepted: bool,
    pub tweet_id: String,
    pub annotator_id: String,
    pub label: Label,
    pub agreement: AgreementReport,
    pub open_disagreements: usize,
}

async fn submit_label(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Result<Json<LabelBody>, JsonRejection>,
) -> Result<(StatusCode, Json<LabelAck>), ApiError> {
    let Json(body) = body?;
    let annotator = annotator_from(body.annotator_id, &headers)?;
    state.check_annotator(&annotator)?;
    state.check_tweet(&body.tweet_id)?;
    let mut store = state.store_mut();
    store.submit(LabelRecord {
        tweet_id: body.tweet_id.clone(),
        annotator_id: annotator.clone(),
        label: body.label,
        timestamp: Utc::now(),
    })?;
    let ack = LabelAck {
        accepted: true,
        tweet_id: body.tweet_id,
        annotator_id: annotator,
        label: body.label,
        agreement: state.agreement(&store),
        open_disagreements: store.open_disagreement_count(),
    };
    Ok((StatusCode::CREATED, Json(ack)))
}

async fn agreement(State(state): State<Arc<AppState>>) -> ApiResult<AgreementReport> {
    let store = state.store();
    Ok(Json(state.agreement(&store)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Disagreement {
    pub tweet_id: String,
    pub text: String,
    pub labels: std::collections::BTreeMap<String, Label>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Disagreements {
    pub count: usize,
    pub items: Vec<Disagreement>,
}

async fn disagreements(State(state): State<Arc<AppState>>) -> ApiResult<Disagreements> {
    let store = state.store();
    let items: Vec<Disagreement> = store
        .open_disagreements()
        .into_iter()
        .map(|id| Disagreement {
            text: state.corpus.get(&id).map(|t| t.text.clone()).unwrap_or_default(),
            labels: store.labels_for(&id),
            tweet_id: id,
        })
        .collect();
    Ok(Json(Disagreements {
        count: items.len(),
        items,
    }))
}

#[derive(Debug, Deserialize)]
struct AdjudicateBody {
    tweet_id: String,
    label: Label,
    #[serde(default = "default_adjudicator")]
    adjudicator_id: String,
}

fn default_adjudicator() -> String {
    "adjudicator".into()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AdjudicationAck {
    pub record: AdjudicationRecord,
    /// Set when the tweet was not an open disagreement.
    pub warning: Option<String>,
}

async fn adjudicate(
    State(state): State<Arc<AppState>>,
    body: Result<Json<AdjudicateBody>, JsonRejection>,
) -> ApiResult<AdjudicationAck> {
    let Json(body) = body?;
    state.check_tweet(&body.tweet_id)?;
    let record = state
        .store_mut()
        .adjudicate(&body.tweet_id, &body.adjudicator_id, body.label, Utc::now())?;
    let warning = (!record.was_disagreement).then(|| format!("tweet `{}` was not a disagreement", record.tweet_id));
    Ok(Json(AdjudicationAck { record, warning }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Stats {
    pub tweets: usize,
    pub labels: usize,
    pub open_disagreements: usize,
    pub phenomena: Option<PhenomenaTable>,
    pub reason: Option<String>,
}

async fn stats(State(state): State<Arc<AppState>>) -> ApiResult<Stats> {
    let (labels, open) = {
        let s = state.store();
        (s.label_count(), s.open_disagreement_count())
    };
    let (phenomena, reason) = match state.phenomena() {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Json(Stats {
        tweets: state.corpus.len(),
        labels,
        open_disagreements: open,
        phenomena,
        reason,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Explanation {
    pub tweet_id: String,
    pub normalized: String,
    pub seeds: Vec<SeedMatch>,
    pub features: FeatureVector,
    pub verdict: Option<RuleVerdict>,
    pub trace: Vec<RuleStep>,
}

async fn explain(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Explanation> {
    let tweet = state
        .corpus
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown tweet `{id}`")))?;
    let analysis = state.resources.analyze(&tweet.text);
    let verdict = state.resources.engine.judge_analysis(&analysis).ok();
    let trace = state.resources.engine.trace(&analysis);
    Ok(Json(Explanation {
        tweet_id: id,
        normalized: analysis.normalized.as_str().to_string(),
        seeds: analysis.matches,
        features: analysis.features,
        verdict,
        trace,
    }))
}

/// Builds the `/v1` router. With `cors_origin` unset any origin is allowed.
pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router, CoreError> {
    let origin = match cors_origin {
        Some(o) => AllowOrigin::exact(
            HeaderValue::from_str(o).map_err(|e| CoreError::Config(format!("bad CORS origin `{o}`: {e}")))?,
        ),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods(tower_http::cors::Any)
        .allow_headers(tower_http::cors::Any);
    let api = Router::new()
        .route("/tasks/next", get(next_task))
        .route("/labels", post(submit_label))
        .route("/agreement", get(agreement))
        .route("/disagreements", get(disagreements))
        .route("/adjudicate", post(adjudicate))
        .route("/stats", get(stats))
        .route("/tweets/{id}/explain", get(explain))
        .with_state(state);
    Ok(Router::new().nest("/v1", api).layer(cors))
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, app: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

//! HTTP facade over the explanation engine.
//!
//! | Method | Path | Body / query | Response |
//! |---|---|---|---|
//! | `POST` | `/datasets` | CSV; `?label=&meta=a,b&quantiles=` | id and profile |
//! | `DELETE` | `/datasets/{id}` | | 204 |
//! | `POST` | `/models` | `{dataset_id, params}` | id, threshold, metrics |
//! | `GET` | `/models/{id}` | | same, plus scorer call count |
//! | `DELETE` | `/models/{id}` | | 204 |
//! | `GET` | `/models/{id}/global` | `?weights=wD,wC,wQ,wR&quantiles=` | global explanation |
//! | `POST` | `/explanations` | `{model_id, row \| point, weights, quantiles}` | local explanation |
//! | `GET` | `/explanations/{id}` | | local explanation |
//! | `GET` | `/explanations/{id}/global` | | global explanation with that request's weights and grid |
//!
//! Explanation ids come back in the `Location` header so the body stays the
//! bare explanation. Errors are `{"code": ..., "message": ...}`.

mod error;
pub mod registry;

use std::net::SocketAddr;
use std::sync::Arc;

use acme_ad::dataset::{read_csv, CsvOptions, DatasetProfile};
use acme_ad::evaluation::DetectionMetrics;
use acme_ad::explainer::{GlobalExplanation, LocalExplanation, Weights};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use error::{ApiError, ApiResult, ErrorBody};
use registry::{DatasetEntry, ExplanationEntry, ModelEntry, ModelParams, Registry, Target};

pub const DEFAULT_QUANTILES: usize = 70;

pub type AppState = Arc<Registry>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/datasets", post(create_dataset))
        .route("/datasets/{id}", axum::routing::delete(delete_dataset))
        .route("/models", post(create_model))
        .route("/models/{id}", get(get_model).delete(delete_model))
        .route("/models/{id}/global", get(model_global))
        .route("/explanations", post(create_explanation))
        .route("/explanations/{id}", get(get_explanation))
        .route("/explanations/{id}/global", get(explanation_global))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::default()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Runs engine work off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::bad_request(format!("request aborted: {e}")))?
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse_weights(value: Option<Value>) -> ApiResult<Weights> {
    match value {
        None | Some(Value::Null) => Ok(Weights::default()),
        Some(v) => serde_json::from_value(v).map_err(|e| ApiError::invalid_weights(e.to_string())),
    }
}

fn check_quantiles(q: usize) -> ApiResult<usize> {
    if q < 2 {
        return Err(ApiError::bad_request(format!("quantiles must be at least 2, got {q}")));
    }
    Ok(q)
}

#[derive(Debug, Deserialize)]
struct DatasetQuery {
    label: Option<String>,
    meta: Option<String>,
    quantiles: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct DatasetCreated {
    pub id: u64,
    pub quantiles: usize,
    pub rejected_rows: usize,
    pub profile: DatasetProfile,
}

async fn create_dataset(
    State(reg): State<AppState>,
    Query(q): Query<DatasetQuery>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetCreated>)> {
    let quantiles = check_quantiles(q.quantiles.unwrap_or(DEFAULT_QUANTILES))?;
    let options = CsvOptions {
        schema: None,
        label_column: q.label,
        meta_columns: q
            .meta
            .map(|m| m.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect())
            .unwrap_or_default(),
    };
    blocking(move || {
        let report = read_csv(&body[..], &options)?;
        let profile = report.dataset.profile();
        let id = reg.add_dataset(DatasetEntry::new(report.dataset, quantiles, report.rejected_rows)?);
        Ok((
            StatusCode::CREATED,
            Json(DatasetCreated {
                id,
                quantiles,
                rejected_rows: report.rejected_rows,
                profile,
            }),
        ))
    })
    .await
}

async fn delete_dataset(State(reg): State<AppState>, Path(id): Path<u64>) -> ApiResult<StatusCode> {
    if reg.remove_dataset(id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found("dataset", id))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRequest {
    dataset_id: u64,
    #[serde(default)]
    params: ModelParams,
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub id: u64,
    pub dataset_id: u64,
    pub params: ModelParams,
    pub threshold: f64,
    pub n_flagged: usize,
    pub metrics: Option<DetectionMetrics>,
    pub scorer_calls: u64,
}

fn summary(id: u64, m: &ModelEntry) -> ModelSummary {
    ModelSummary {
        id,
        dataset_id: m.dataset_id,
        params: m.params.clone(),
        threshold: m.detector.threshold(),
        n_flagged: m.n_flagged,
        metrics: m.metrics,
        scorer_calls: m.scorer_calls(),
    }
}

async fn create_model(
    State(reg): State<AppState>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<ModelSummary>)> {
    let req: ModelRequest = parse_json(&body)?;
    let dataset = reg
        .dataset(req.dataset_id)
        .ok_or_else(|| ApiError::not_found("dataset", req.dataset_id))?;
    blocking(move || {
        let entry = ModelEntry::train(req.dataset_id, dataset, req.params)?;
        let (id, model) = reg.add_model(entry);
        Ok((StatusCode::CREATED, Json(summary(id, &model))))
    })
    .await
}

fn model(reg: &Registry, id: u64) -> ApiResult<Arc<ModelEntry>> {
    reg.model(id).ok_or_else(|| ApiError::not_found("model", id))
}

async fn get_model(State(reg): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<ModelSummary>> {
    let m = model(&reg, id)?;
    Ok(Json(summary(id, &m)))
}

async fn delete_model(State(reg): State<AppState>, Path(id): Path<u64>) -> ApiResult<StatusCode> {
    if reg.remove_model(id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found("model", id))
    }
}

#[derive(Debug, Deserialize)]
struct GlobalQuery {
    weights: Option<String>,
    quantiles: Option<usize>,
}

async fn global(
    reg: AppState,
    model_id: u64,
    quantiles: usize,
    weights: Weights,
) -> ApiResult<Json<GlobalExplanation>> {
    let m = model(&reg, model_id)?;
    blocking(move || {
        let set = reg.anomalies(model_id, &m, quantiles)?;
        Ok(Json(set.global(&m.dataset.data.feature_names(), weights)?))
    })
    .await
}

async fn model_global(
    State(reg): State<AppState>,
    Path(id): Path<u64>,
    Query(q): Query<GlobalQuery>,
) -> ApiResult<Json<GlobalExplanation>> {
    let m = model(&reg, id)?;
    let weights = match q.weights {
        Some(w) => w.parse().map_err(|e: acme_ad::Error| ApiError::invalid_weights(e.to_string()))?,
        None => Weights::default(),
    };
    let quantiles = check_quantiles(q.quantiles.unwrap_or(m.dataset.quantiles))?;
    global(reg, id, quantiles, weights).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplainRequest {
    model_id: u64,
    row: Option<usize>,
    point: Option<Vec<f64>>,
    weights: Option<Value>,
    #[serde(alias = "Q")]
    quantiles: Option<usize>,
}

async fn create_explanation(State(reg): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: ExplainRequest = parse_json(&body)?;
    let m = model(&reg, req.model_id)?;
    let weights = parse_weights(req.weights)?;
    let quantiles = check_quantiles(req.quantiles.unwrap_or(m.dataset.quantiles))?;
    let target = match (req.row, req.point) {
        (Some(row), None) => Target::Row(row),
        (None, Some(point)) => Target::Point(point),
        _ => return Err(ApiError::bad_request("give exactly one of `row` and `point`")),
    };
    let model_id = req.model_id;
    blocking(move || {
        let explanation = match &target {
            Target::Row(row) => reg.explain_row(model_id, &m, *row, quantiles, weights)?,
            Target::Point(point) => reg.explain_point(&m, point, quantiles, weights)?,
        };
        let id = reg.add_explanation(ExplanationEntry {
            model_id,
            quantiles,
            target,
            explanation: explanation.clone(),
        });
        Ok((
            StatusCode::CREATED,
            [(header::LOCATION, format!("/explanations/{id}"))],
            Json(explanation),
        ))
    })
    .await
}

fn stored(reg: &Registry, id: u64) -> ApiResult<Arc<ExplanationEntry>> {
    reg.explanation(id).ok_or_else(|| ApiError::not_found("explanation", id))
}

async fn get_explanation(State(reg): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<LocalExplanation>> {
    Ok(Json(stored(&reg, id)?.explanation.clone()))
}

async fn explanation_global(
    State(reg): State<AppState>,
    Path(id): Path<u64>,
) -> ApiResult<Json<GlobalExplanation>> {
    let e = stored(&reg, id)?;
    global(reg, e.model_id, e.quantiles, e.explanation.weights).await
}

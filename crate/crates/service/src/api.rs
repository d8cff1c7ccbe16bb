//! Routes. Every body is JSON, every error is `{code, message}`.
//!
//! | method | path |
//! |---|---|
//! | POST | `/files` |
//! | GET | `/files`, `/files/{name}` |
//! | POST | `/files/{name}/experiments` |
//! | GET | `/files/{name}/experiments/{id}` |
//! | PUT | `/files/{name}/experiments/{id}/config` |
//! | POST | `/files/{name}/experiments/{id}/generate`, `.../refresh`, `.../run` |
//! | GET | `/files/{name}/experiments/{id}/results`, `.../results.csv` |
//! | GET | `/files/{name}/consolidated`, `/files/{name}/consolidated.csv`, `/files/{name}/events` |
//! | GET | `/quantify`, `/sample-config` |

use std::collections::{BTreeMap, HashMap};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use ras_core::experiment::{Event, Experiment, ExperimentFile, ExperimentStatus, RunRequest, StrategyRun};
use ras_core::export::{export_csv, ExportTarget};
use ras_core::metrics::{consolidate, ConsolidatedMetrics};
use ras_core::model::{CloudConfig, ServiceId, Tick};
use ras_core::quantification::{apportion, quantify, QuantMode, QuantificationResult};
use ras_core::sample;
use ras_core::store::FileSummary;
use ras_core::strategies::StrategyId;
use ras_core::RasError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::archive::zip_documents;
use crate::error::ApiError;
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/files", post(create_file).get(list_files))
        .route("/files/{name}", get(get_file))
        .route("/files/{name}/experiments", post(next_experiment))
        .route("/files/{name}/experiments/{id}", get(get_experiment))
        .route("/files/{name}/experiments/{id}/config", put(set_config))
        .route("/files/{name}/experiments/{id}/generate", post(generate))
        .route("/files/{name}/experiments/{id}/refresh", post(refresh))
        .route("/files/{name}/experiments/{id}/run", post(run))
        .route("/files/{name}/experiments/{id}/results", get(results))
        .route("/files/{name}/experiments/{id}/results.csv", get(results_csv))
        .route("/files/{name}/consolidated", get(consolidated))
        .route("/files/{name}/consolidated.csv", get(consolidated_csv))
        .route("/files/{name}/events", get(events))
        .route("/quantify", get(quantify_preview))
        .route("/sample-config", get(sample_config))
        .fallback(|| async {
            ApiError { status: StatusCode::NOT_FOUND, ..ApiError::bad_request("NOT_FOUND", "no such route") }
        })
        .with_state(state)
}

/// Runs store work off the async executor.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, RasError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            ..ApiError::bad_request("INTERNAL", e.to_string())
        }),
    }
}

/// Parses a JSON body; an empty body yields `T::default()` when `optional`.
fn parse_body<T: DeserializeOwned + Default>(body: &Bytes, optional: bool) -> ApiResult<T> {
    if optional && body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("BAD_REQUEST", format!("invalid JSON body: {e}")))
}

fn parse_id(raw: &str) -> ApiResult<u32> {
    raw.parse().map_err(|_| ApiError::bad_request("BAD_REQUEST", format!("experiment id {raw:?} is not a number")))
}

fn zip_response(docs: &[ras_core::export::CsvDocument], filename: &str) -> ApiResult<Response> {
    let bytes = zip_documents(docs).map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        ..ApiError::bad_request("IO", e.to_string())
    })?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{filename}\"")),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Debug, Default, Deserialize)]
struct CreateFile {
    name: String,
    /// Defaults to the bundled sample configuration.
    #[serde(default)]
    config: Option<CloudConfig>,
}

async fn create_file(State(s): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<ExperimentFile>)> {
    let req: CreateFile = parse_body(&body, false)?;
    let config = req.config.unwrap_or_else(sample::reference_config);
    let file = blocking(move || s.store.create(&req.name, config)).await?;
    Ok((StatusCode::CREATED, Json(file)))
}

async fn list_files(State(s): State<AppState>) -> ApiResult<Json<Vec<FileSummary>>> {
    Ok(Json(blocking(move || s.store.list()).await?))
}

async fn get_file(State(s): State<AppState>, Path(name): Path<String>) -> ApiResult<Json<ExperimentFile>> {
    Ok(Json(blocking(move || s.store.load(&name)).await?))
}

#[derive(Debug, Default, Deserialize)]
struct NextExperiment {
    #[serde(default)]
    added_demands: BTreeMap<ServiceId, u64>,
    new_arrival_hi: Tick,
}

async fn next_experiment(
    State(s): State<AppState>,
    Path(name): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Experiment>)> {
    let req: NextExperiment = parse_body(&body, false)?;
    let exp = blocking(move || s.store.update(&name, |f| f.next_experiment(&req.added_demands, req.new_arrival_hi).cloned()))
        .await?;
    Ok((StatusCode::CREATED, Json(exp)))
}

async fn get_experiment(State(s): State<AppState>, Path((name, id)): Path<(String, String)>) -> ApiResult<Json<Experiment>> {
    let id = parse_id(&id)?;
    Ok(Json(blocking(move || s.store.load(&name)?.experiment(id).cloned()).await?))
}

async fn set_config(
    State(s): State<AppState>,
    Path((name, id)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Experiment>> {
    let id = parse_id(&id)?;
    let config: CloudConfig = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request("BAD_REQUEST", format!("invalid configuration: {e}")))?;
    Ok(Json(blocking(move || s.store.update(&name, |f| f.set_config(id, config).cloned())).await?))
}

#[derive(Debug, Default, Deserialize)]
struct Generate {
    #[serde(default)]
    seed: Option<u64>,
}

async fn generate(
    State(s): State<AppState>,
    Path((name, id)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Experiment>> {
    let id = parse_id(&id)?;
    let req: Generate = parse_body(&body, true)?;
    let zones = s.zones.clone();
    Ok(Json(blocking(move || s.store.update(&name, |f| f.generate(id, req.seed, &zones).cloned())).await?))
}

async fn refresh(State(s): State<AppState>, Path((name, id)): Path<(String, String)>) -> ApiResult<Json<Experiment>> {
    let id = parse_id(&id)?;
    let zones = s.zones.clone();
    Ok(Json(blocking(move || s.store.update(&name, |f| f.refresh(id, &zones).cloned())).await?))
}

async fn run(
    State(s): State<AppState>,
    Path((name, id)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Experiment>> {
    let id = parse_id(&id)?;
    let req: RunRequest = parse_body(&body, true)?;
    Ok(Json(blocking(move || s.store.update(&name, |f| f.run(id, &req).cloned())).await?))
}

#[derive(Debug, Serialize)]
struct Results {
    experiment_id: u32,
    seed: Option<u64>,
    mode: Option<QuantMode>,
    ranking: Vec<StrategyId>,
    runs: Vec<StrategyRun>,
}

async fn results(State(s): State<AppState>, Path((name, id)): Path<(String, String)>) -> ApiResult<Json<Results>> {
    let id = parse_id(&id)?;
    let exp = blocking(move || s.store.load(&name)?.experiment(id).cloned()).await?;
    if exp.status != ExperimentStatus::Completed {
        return Err(RasError::NotReady(id).into());
    }
    Ok(Json(Results { experiment_id: exp.experiment_id, seed: exp.seed, mode: exp.mode, ranking: exp.ranking, runs: exp.runs }))
}

async fn results_csv(State(s): State<AppState>, Path((name, id)): Path<(String, String)>) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let file_name = name.clone();
    let docs = blocking(move || export_csv(&s.store.load(&name)?, ExportTarget::Experiment(id))).await?;
    zip_response(&docs, &format!("{file_name}-experiment-{id}.zip"))
}

async fn consolidated(State(s): State<AppState>, Path(name): Path<String>) -> ApiResult<Json<ConsolidatedMetrics>> {
    Ok(Json(blocking(move || consolidate(&s.store.load(&name)?)).await?))
}

async fn consolidated_csv(State(s): State<AppState>, Path(name): Path<String>) -> ApiResult<Response> {
    let file_name = name.clone();
    let docs = blocking(move || export_csv(&s.store.load(&name)?, ExportTarget::Consolidated)).await?;
    zip_response(&docs, &format!("{file_name}-consolidated.zip"))
}

async fn events(State(s): State<AppState>, Path(name): Path<String>) -> ApiResult<Json<Vec<Event>>> {
    Ok(Json(blocking(move || Ok(s.store.load(&name)?.event_log)).await?))
}

#[derive(Debug, Serialize)]
pub struct QuantifyPreview {
    #[serde(flatten)]
    pub result: QuantificationResult,
    /// Largest-remainder split of `n` when it was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
}

/// Query: `capacities` (comma separated, required), `mode`
/// (`exact` | `paper_compat`), `n` (request count to split).
pub fn quantify_query(query: &HashMap<String, String>) -> ApiResult<QuantifyPreview> {
    let raw = query.get("capacities").map(String::as_str).unwrap_or("");
    let capacities = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| ApiError::bad_request("BAD_REQUEST", format!("capacity {s:?} is not a number"))))
        .collect::<ApiResult<Vec<f64>>>()?;
    let mode = match query.get("mode") {
        Some(m) => m.parse::<QuantMode>().map_err(|e| ApiError::bad_request("BAD_REQUEST", e))?,
        None => QuantMode::default(),
    };
    let n = match query.get("n") {
        Some(n) => Some(n.parse::<u64>().map_err(|_| ApiError::bad_request("BAD_REQUEST", format!("n {n:?} is not a count")))?),
        None => None,
    };
    let result = quantify(&capacities, mode)?;
    let counts = n.map(|n| apportion(&result.percentages, n)).transpose()?;
    Ok(QuantifyPreview { result, counts })
}

async fn quantify_preview(Query(query): Query<HashMap<String, String>>) -> ApiResult<Json<QuantifyPreview>> {
    Ok(Json(quantify_query(&query)?))
}

async fn sample_config() -> Json<CloudConfig> {
    Json(sample::reference_config())
}

//! Local HTTP service for the interactive curation loop: serve the current
//! map, accept thesaurus rules and rebuild on request.
//!
//! | method | path                   | body / query                  |
//! |--------|------------------------|-------------------------------|
//! | GET    | `/map`                 | map JSON                      |
//! | GET    | `/config`              | pipeline config               |
//! | GET    | `/thesaurus`           | thesaurus TSV                 |
//! | POST   | `/thesaurus`           | TSV rules to append           |
//! | POST   | `/rebuild`             | returns the new map JSON      |
//! | GET    | `/node/{id}/neighbors` | linked nodes, strongest first |
//! | GET    | `/overlay`             | `?cutoff=<fractional year>`   |
//! | GET    | `/density`             | `?resolution=&bandwidth=`     |
//!
//! Errors are JSON `{"error": <code>, "message": <text>}`.

mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use scimap_core::map::round_significant;
use scimap_core::overlay::default_bandwidth;
use scimap_core::thesaurus::parse_rules;
use scimap_core::{density_field, emerging_filter, PipelineError};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::TcpListener;

pub use state::{AppState, Snapshot};

pub const DEFAULT_DENSITY_RESOLUTION: usize = 100;
pub const MAX_DENSITY_RESOLUTION: usize = 1000;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    InvalidRule(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("no node with id {0}")]
    UnknownNode(usize),
    #[error("a rebuild is already in progress")]
    RebuildInProgress,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("rebuild task failed: {0}")]
    Internal(String),
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            ApiError::InvalidRule(_) => (StatusCode::BAD_REQUEST, "invalid_rule"),
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ApiError::UnknownNode(_) => (StatusCode::NOT_FOUND, "unknown_node"),
            ApiError::RebuildInProgress => (StatusCode::CONFLICT, "rebuild_in_progress"),
            ApiError::Pipeline(e) => (StatusCode::UNPROCESSABLE_ENTITY, e.code()),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (status, Json(ErrorBody { error: code, message: self.to_string() })).into_response()
    }
}

#[derive(Debug, Serialize)]
struct Neighbor {
    id: usize,
    label: String,
    strength: u64,
}

#[derive(Debug, Serialize)]
struct NeighborsResponse {
    id: usize,
    label: String,
    neighbors: Vec<Neighbor>,
}

#[derive(Debug, Serialize)]
struct RulesAdded {
    added: usize,
    total: usize,
}

#[derive(Debug, Serialize)]
struct OverlayNode {
    id: usize,
    label: String,
    score: Option<f64>,
    normalized: Option<f64>,
}

#[derive(Debug, Serialize)]
struct OverlayResponse {
    cutoff: Option<f64>,
    nodes: Vec<OverlayNode>,
    /// Labels scored strictly after `cutoff`; present only with a cutoff.
    emerging: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct OverlayQuery {
    cutoff: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct DensityQuery {
    resolution: Option<usize>,
    bandwidth: Option<f64>,
}

fn json_text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn get_map(State(state): State<Arc<AppState>>) -> Response {
    json_text(state.snapshot().json.clone())
}

async fn get_config(State(state): State<Arc<AppState>>) -> Response {
    Json(state.config().clone()).into_response()
}

async fn get_thesaurus(State(state): State<Arc<AppState>>) -> Response {
    ([(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")], state.thesaurus().to_tsv()).into_response()
}

async fn post_thesaurus(State(state): State<Arc<AppState>>, body: String) -> Result<Response, ApiError> {
    let rules = parse_rules(&body).map_err(|e| ApiError::InvalidRule(e.to_string()))?;
    let added = rules.len();
    let total = state.add_rules(rules).map_err(|e| ApiError::InvalidRule(e.to_string()))?;
    tracing::info!(added, total, "thesaurus rules added");
    Ok(Json(RulesAdded { added, total }).into_response())
}

async fn post_rebuild(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let _guard = state.rebuild.try_lock().map_err(|_| ApiError::RebuildInProgress)?;
    let worker = Arc::clone(&state);
    let snapshot = tokio::task::spawn_blocking(move || worker.rebuild_blocking())
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    tracing::info!(generation = snapshot.generation, nodes = snapshot.map.nodes.len(), "map rebuilt");
    Ok(json_text(snapshot.json.clone()))
}

async fn get_neighbors(State(state): State<Arc<AppState>>, Path(id): Path<usize>) -> Result<Response, ApiError> {
    let snapshot = state.snapshot();
    let map = &snapshot.map;
    let node = map.node(id).ok_or(ApiError::UnknownNode(id))?;
    let neighbors = map
        .neighbors(id)
        .into_iter()
        .map(|(other, strength)| Neighbor { id: other, label: map.nodes[other - 1].label.clone(), strength })
        .collect();
    Ok(Json(NeighborsResponse { id, label: node.label.clone(), neighbors }).into_response())
}

async fn get_overlay(State(state): State<Arc<AppState>>, Query(query): Query<OverlayQuery>) -> Response {
    let snapshot = state.snapshot();
    let map = &snapshot.map;
    let nodes = map
        .nodes
        .iter()
        .zip(&snapshot.overlay.normalized)
        .map(|(n, &normalized)| OverlayNode {
            id: n.id,
            label: n.label.clone(),
            score: n.avg_pub_date.map(round_significant),
            normalized: normalized.map(round_significant),
        })
        .collect();
    let emerging = query.cutoff.map(|cutoff| {
        emerging_filter(map.nodes.iter().map(|n| n.label.as_str()), &snapshot.overlay.scores, cutoff)
            .into_iter()
            .collect()
    });
    Json(OverlayResponse { cutoff: query.cutoff, nodes, emerging }).into_response()
}

async fn get_density(State(state): State<Arc<AppState>>, Query(query): Query<DensityQuery>) -> Result<Response, ApiError> {
    let resolution = query.resolution.unwrap_or(DEFAULT_DENSITY_RESOLUTION);
    if !(2..=MAX_DENSITY_RESOLUTION).contains(&resolution) {
        return Err(ApiError::BadRequest(format!("resolution must be between 2 and {MAX_DENSITY_RESOLUTION}")));
    }
    if query.bandwidth.is_some_and(|h| !(h > 0.0 && h.is_finite())) {
        return Err(ApiError::BadRequest("bandwidth must be a positive number".into()));
    }
    let snapshot = state.snapshot();
    let positions = snapshot.map.positions();
    let weights: Vec<f64> = snapshot.map.nodes.iter().map(|n| n.occurrences as f64).collect();
    let bandwidth = query.bandwidth.unwrap_or_else(|| default_bandwidth(&positions));
    let field = tokio::task::spawn_blocking(move || density_field(&positions, &weights, resolution, bandwidth))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(field).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/map", get(get_map))
        .route("/config", get(get_config))
        .route("/thesaurus", get(get_thesaurus).post(post_thesaurus))
        .route("/rebuild", axum::routing::post(post_rebuild))
        .route("/node/{id}/neighbors", get(get_neighbors))
        .route("/overlay", get(get_overlay))
        .route("/density", get(get_density))
        .with_state(state)
}

/// Binds `127.0.0.1:port`; port 0 picks a free port.
pub async fn bind(port: u16) -> std::io::Result<TcpListener> {
    TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], port))).await
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(state)).await
}

/// Starts the service on a free loopback port in the background and returns
/// its base URL.
pub async fn spawn(state: Arc<AppState>) -> std::io::Result<String> {
    let listener = bind(0).await?;
    let url = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move {
        if let Err(e) = serve(listener, state).await {
            tracing::error!(error = %e, "server stopped");
        }
    });
    Ok(url)
}

#[cfg(test)]
mod tests {
    use super::*;
    use scimap_core::corpus::BibRecord;
    use scimap_core::{PipelineConfig, Thesaurus};

    fn tiny_state() -> AppState {
        let record = |id: &str| BibRecord {
            id: id.into(),
            title: String::new(),
            authors: vec![],
            affiliations: vec![],
            countries: Default::default(),
            keywords: ["a", "b"].iter().map(|k| k.to_string()).collect(),
            pub_year: None,
            pub_month: None,
            venue: String::new(),
            citations: 0,
        };
        let config = PipelineConfig { min_occurrences: 1, ..PipelineConfig::default() };
        AppState::new(vec![record("1"), record("2")], Thesaurus::new(), config).unwrap()
    }

    #[tokio::test]
    async fn concurrent_rebuild_is_refused() {
        let state = Arc::new(tiny_state());
        let client = scimap_client::ScimapClient::new(spawn(Arc::clone(&state)).await.unwrap());
        {
            let _busy = state.rebuild.lock().await;
            let err = client.rebuild().await.unwrap_err();
            assert_eq!(err.status().map(|s| s.as_u16()), Some(409));
        }
        assert_eq!(client.rebuild().await.unwrap().nodes.len(), 2);
        assert_eq!(state.snapshot().generation, 2);
    }
}

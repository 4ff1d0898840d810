//! HTTP client for a running `scimap serve` instance.

use reqwest::{Response, StatusCode};
use scimap_core::map::read_json;
use scimap_core::{DensityField, ItemMap, PipelineConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error body.
    #[error("{status}: {code}: {message}")]
    Api { status: StatusCode, code: String, message: String },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
            ClientError::Decode(_) => None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
    message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    pub label: String,
    pub strength: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbors {
    pub id: usize,
    pub label: String,
    pub neighbors: Vec<Neighbor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulesAdded {
    pub added: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayNode {
    pub id: usize,
    pub label: String,
    pub score: Option<f64>,
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub cutoff: Option<f64>,
    pub nodes: Vec<OverlayNode>,
    pub emerging: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct ScimapClient {
    base: String,
    http: reqwest::Client,
}

impl ScimapClient {
    /// `base` is the service root, e.g. `http://127.0.0.1:8750`.
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    async fn checked(response: Response) -> Result<Response, ClientError> {
        let status = response.status();
        if status.is_success() {
            return Ok(response);
        }
        let text = response.text().await?;
        Err(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => ClientError::Api { status, code: body.error, message: body.message },
            Err(_) => ClientError::Api { status, code: "http".into(), message: text },
        })
    }

    async fn get_json<T: DeserializeOwned>(&self, path: &str, query: &[(&str, String)]) -> Result<T, ClientError> {
        let response = Self::checked(self.http.get(self.url(path)).query(query).send().await?).await?;
        let text = response.text().await?;
        serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()))
    }

    /// The current map as raw JSON text, byte-for-byte as served.
    pub async fn map_json(&self) -> Result<String, ClientError> {
        Ok(Self::checked(self.http.get(self.url("/map")).send().await?).await?.text().await?)
    }

    pub async fn map(&self) -> Result<ItemMap, ClientError> {
        read_json(&self.map_json().await?).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub async fn config(&self) -> Result<PipelineConfig, ClientError> {
        self.get_json("/config", &[]).await
    }

    pub async fn thesaurus_tsv(&self) -> Result<String, ClientError> {
        Ok(Self::checked(self.http.get(self.url("/thesaurus")).send().await?).await?.text().await?)
    }

    /// Appends rules given in thesaurus TSV form. The header line is optional.
    pub async fn add_rules(&self, tsv: &str) -> Result<RulesAdded, ClientError> {
        let response = self.http.post(self.url("/thesaurus")).body(tsv.to_string()).send().await?;
        let text = Self::checked(response).await?.text().await?;
        serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub async fn rebuild_json(&self) -> Result<String, ClientError> {
        Ok(Self::checked(self.http.post(self.url("/rebuild")).send().await?).await?.text().await?)
    }

    pub async fn rebuild(&self) -> Result<ItemMap, ClientError> {
        read_json(&self.rebuild_json().await?).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub async fn neighbors(&self, id: usize) -> Result<Neighbors, ClientError> {
        self.get_json(&format!("/node/{id}/neighbors"), &[]).await
    }

    pub async fn overlay(&self, cutoff: Option<f64>) -> Result<Overlay, ClientError> {
        let query: Vec<(&str, String)> = cutoff.map(|c| ("cutoff", c.to_string())).into_iter().collect();
        self.get_json("/overlay", &query).await
    }

    pub async fn density(&self, resolution: Option<usize>, bandwidth: Option<f64>) -> Result<DensityField, ClientError> {
        let mut query = Vec::new();
        if let Some(r) = resolution {
            query.push(("resolution", r.to_string()));
        }
        if let Some(h) = bandwidth {
            query.push(("bandwidth", h.to_string()));
        }
        self.get_json("/density", &query).await
    }
}

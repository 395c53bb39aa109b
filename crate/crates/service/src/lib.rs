//! Stateless pricing endpoint.
//!
//! `POST /predict` takes the six raw deal features as JSON and returns the
//! model's price with metadata; `GET /health` reports the loaded model. The
//! model is loaded once and shared read-only between requests.

pub mod request;

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mlat_core::dataset::{encode_features, RawFeatures, FEATURE_NAMES};
use mlat_core::gbdt::{GbdtError, GbdtModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use request::{canonicalize, parse_features, FieldError, ALIASES};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot load model artifact {path}: {source}")]
    Artifact { path: String, source: GbdtError },
    #[error("model must use the canonical feature order {expected:?}, found {found:?}")]
    FeatureOrder {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub predicted_price: f64,
    pub currency: String,
    pub model_version: String,
    pub feature_importances: BTreeMap<String, f64>,
    /// The request in canonical field names.
    pub echo: RawFeatures,
    pub latency_micros: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub ok: bool,
    pub model_version: String,
    pub n_train: usize,
    pub uptime_secs: f64,
}

/// Error body shared by every failure: `{"error": ..., "details": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: String,
    pub details: Vec<FieldError>,
}

impl ApiError {
    fn malformed(message: String) -> Self {
        ApiError {
            status: 400,
            error: "malformed JSON".into(),
            details: vec![FieldError {
                field: String::new(),
                message,
            }],
        }
    }

    fn invalid(details: Vec<FieldError>) -> Self {
        ApiError {
            status: 422,
            error: "validation failed".into(),
            details,
        }
    }

    fn internal(message: String) -> Self {
        ApiError {
            status: 500,
            error: "internal error".into(),
            details: vec![FieldError {
                field: String::new(),
                message,
            }],
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

/// `sha256:` plus the first 12 hex digits of the serialized model.
pub fn model_version(model: &GbdtModel) -> String {
    let digest = Sha256::digest(model.to_json().as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

#[derive(Debug)]
pub struct PricingService {
    model: GbdtModel,
    version: String,
    importances: BTreeMap<String, f64>,
    started: Instant,
}

impl PricingService {
    pub fn new(model: GbdtModel) -> Result<Self, ServiceError> {
        let expected: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        if model.feature_names != expected {
            return Err(ServiceError::FeatureOrder {
                expected,
                found: model.feature_names.clone(),
            });
        }
        Ok(PricingService {
            version: model_version(&model),
            importances: model.feature_importance().into_iter().collect(),
            model,
            started: Instant::now(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let model = GbdtModel::load(path).map_err(|source| ServiceError::Artifact {
            path: path.display().to_string(),
            source,
        })?;
        Self::new(model)
    }

    pub fn model(&self) -> &GbdtModel {
        &self.model
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn health(&self) -> HealthStatus {
        HealthStatus {
            ok: true,
            model_version: self.version.clone(),
            n_train: self.model.n_train,
            uptime_secs: self.started.elapsed().as_secs_f64(),
        }
    }

    /// Validate, canonicalize, encode and predict for one request body.
    pub fn handle_predict(&self, body: &[u8]) -> Result<PredictResponse, ApiError> {
        let start = Instant::now();
        let value: Value =
            serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))?;
        self.predict_value(&value, start)
    }

    /// Same as [`Self::handle_predict`] for an already-parsed document.
    pub fn handle_predict_json(&self, value: &Value) -> Result<PredictResponse, ApiError> {
        self.predict_value(value, Instant::now())
    }

    fn predict_value(&self, value: &Value, start: Instant) -> Result<PredictResponse, ApiError> {
        let obj = value.as_object().ok_or_else(|| {
            ApiError::invalid(vec![FieldError {
                field: String::new(),
                message: "request body must be a JSON object".into(),
            }])
        })?;
        let canonical = canonicalize(obj).map_err(ApiError::invalid)?;
        let raw = parse_features(&canonical).map_err(ApiError::invalid)?;
        let x = encode_features(&raw).map_err(|e| {
            ApiError::invalid(vec![FieldError {
                field: String::new(),
                message: e.to_string(),
            }])
        })?;
        let price = self
            .model
            .predict(x.as_slice())
            .map_err(|e| ApiError::internal(e.to_string()))?;
        if !price.is_finite() {
            return Err(ApiError::internal(format!("model produced {price}")));
        }
        Ok(PredictResponse {
            predicted_price: price,
            currency: "USD".into(),
            model_version: self.version.clone(),
            feature_importances: self.importances.clone(),
            echo: raw,
            latency_micros: start.elapsed().as_micros() as u64,
        })
    }
}

async fn predict_route(State(svc): State<Arc<PricingService>>, body: Bytes) -> Response {
    match svc.handle_predict(&body) {
        Ok(r) => Json(r).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn health_route(State(svc): State<Arc<PricingService>>) -> Json<HealthStatus> {
    Json(svc.health())
}

pub fn router(service: Arc<PricingService>) -> Router {
    Router::new()
        .route("/predict", post(predict_route))
        .route("/health", get(health_route))
        .with_state(service)
}

/// A bound listener; `local_addr` is known before serving starts.
pub struct Server {
    listener: tokio::net::TcpListener,
    service: Arc<PricingService>,
}

impl Server {
    pub async fn bind(service: Arc<PricingService>, addr: &str) -> Result<Self, ServiceError> {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|source| ServiceError::Bind {
                addr: addr.to_string(),
                source,
            })?;
        Ok(Server { listener, service })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, ServiceError> {
        Ok(self.listener.local_addr()?)
    }

    pub async fn serve_until(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
        axum::serve(self.listener, router(self.service))
            .with_graceful_shutdown(shutdown)
            .await?;
        Ok(())
    }
}

/// Load the artifact, bind and serve until Ctrl-C. Blocks the calling thread.
pub fn run(model_path: impl AsRef<Path>, addr: &str) -> Result<(), ServiceError> {
    serve_blocking(PricingService::load(model_path)?, addr)
}

/// Bind and serve `service` until Ctrl-C. Blocks the calling thread.
pub fn serve_blocking(service: PricingService, addr: &str) -> Result<(), ServiceError> {
    let service = Arc::new(service);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let server = Server::bind(service.clone(), addr).await?;
        eprintln!(
            "serving model {} on http://{}",
            service.version(),
            server.local_addr()?
        );
        server
            .serve_until(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mlat_core::presets::pinned_model;

    fn service() -> PricingService {
        PricingService::new(pinned_model().unwrap()).unwrap()
    }

    #[test]
    fn error_classes() {
        let svc = service();
        assert_eq!(svc.handle_predict(b"{\"client_revenue\": ").unwrap_err().status, 400);
        assert_eq!(svc.handle_predict(b"[1, 2]").unwrap_err().status, 422);
        let err = svc
            .handle_predict(br#"{"client_revenue": 1e6, "est_duration_weeks": 8, "pain_severity_score": 3, "integration_complexity": 4, "phase": 1, "tech_stack": "mainframe"}"#)
            .unwrap_err();
        assert_eq!(err.status, 422);
        assert_eq!(err.details[0].field, "tech_stack");
        assert!(err.details[0].message.contains("no_code, low_code, custom"));
        let body = serde_json::to_value(&err).unwrap();
        assert!(body.get("error").is_some() && body.get("details").is_some());
        assert!(body.get("status").is_none());
    }

    #[test]
    fn service_adds_no_numerics() {
        let svc = service();
        let r = svc
            .handle_predict(br#"{"client_revenue": 1000000, "duration_weeks": 8, "integ_complexity": 4, "pain_score": 3, "phase": 1, "tech_stack": "custom"}"#)
            .unwrap();
        let direct = svc.model().predict(encode_features(&r.echo).unwrap().as_slice()).unwrap();
        assert_eq!(r.predicted_price.to_bits(), direct.to_bits());
        assert_eq!(r.currency, "USD");
        let sum: f64 = r.feature_importances.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let echo = serde_json::to_value(r.echo).unwrap();
        for (alias, _) in ALIASES {
            assert!(echo.get(alias).is_none());
        }
    }

    #[test]
    fn version_is_stable_hash() {
        let m = pinned_model().unwrap();
        let v = model_version(&m);
        assert_eq!(v, model_version(&m.clone()));
        assert!(v.starts_with("sha256:") && v.len() == 19);
        let mut other = m;
        other.base_score += 1.0;
        assert_ne!(model_version(&other), v);
    }

    #[test]
    fn rejects_non_canonical_models() {
        let mut m = pinned_model().unwrap();
        m.feature_names.swap(0, 1);
        assert!(matches!(PricingService::new(m), Err(ServiceError::FeatureOrder { .. })));
    }
}

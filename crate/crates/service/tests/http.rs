use std::collections::HashMap;
use std::sync::Arc;
use std::thread;

use mlat_core::presets::pinned_model;
use mlat_service::{HealthStatus, PredictResponse, PricingService, Server, ServiceError};
use serde_json::{json, Value};

struct Running {
    base: String,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
    }
}

fn start() -> Running {
    let svc = Arc::new(PricingService::new(pinned_model().unwrap()).unwrap());
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let handle = thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let server = Server::bind(svc, "127.0.0.1:0").await.unwrap();
            addr_tx.send(server.local_addr().unwrap()).unwrap();
            server
                .serve_until(async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
        });
    });
    let addr = addr_rx.recv().unwrap();
    Running {
        base: format!("http://{addr}"),
        stop: Some(stop_tx),
        handle: Some(handle),
    }
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

fn post(base: &str, body: &str) -> (u16, Value) {
    let mut resp = agent()
        .post(format!("{base}/predict"))
        .header("content-type", "application/json")
        .send(body)
        .unwrap();
    let status = resp.status().as_u16();
    (status, resp.body_mut().read_json().unwrap())
}

fn payload(pain: u8, complexity: u8) -> Value {
    json!({
        "client_revenue": 1_000_000,
        "est_duration_weeks": 8,
        "pain_severity_score": pain,
        "integration_complexity": complexity,
        "phase": 1,
        "tech_stack": "custom"
    })
}

#[test]
fn health_reports_loaded_model() {
    let server = start();
    let mut resp = agent().get(format!("{}/health", server.base)).call().unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let h: HealthStatus = resp.body_mut().read_json().unwrap();
    assert!(h.ok);
    assert!(h.model_version.starts_with("sha256:"));
    assert_eq!(h.n_train, 56);
}

#[test]
fn predict_and_error_statuses() {
    let server = start();
    let (status, body) = post(&server.base, &payload(3, 4).to_string());
    assert_eq!(status, 200);
    let r: PredictResponse = serde_json::from_value(body).unwrap();
    assert!(r.predicted_price > 0.0);

    let (status, body) = post(&server.base, "{not json");
    assert_eq!(status, 400);
    assert!(body["error"].is_string() && body["details"].is_array());

    let mut bad = payload(3, 4);
    bad["tech_stack"] = json!("mainframe");
    let (status, body) = post(&server.base, &bad.to_string());
    assert_eq!(status, 422);
    assert_eq!(body["details"][0]["field"], "tech_stack");

    let mut conflict = payload(3, 4);
    conflict["pain_score"] = json!(5);
    let (status, body) = post(&server.base, &conflict.to_string());
    assert_eq!(status, 422);
    assert!(body["details"][0]["message"].as_str().unwrap().contains("conflicting aliases"));
}

#[test]
fn concurrent_storm() {
    let server = start();
    let base = server.base.clone();
    let direct = PricingService::new(pinned_model().unwrap()).unwrap();
    let results: Vec<(Value, f64)> = thread::scope(|s| {
        let handles: Vec<_> = (0..64)
            .map(|i| {
                let base = base.clone();
                s.spawn(move || {
                    let p = payload((i % 5 + 1) as u8, (i / 5 % 5 + 1) as u8);
                    let (status, body) = post(&base, &p.to_string());
                    assert_eq!(status, 200);
                    (p, body["predicted_price"].as_f64().unwrap())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(results.len(), 64);
    for (p, price) in results {
        let want = direct.handle_predict_json(&p).unwrap().predicted_price;
        assert_eq!(price.to_bits(), want.to_bits());
    }
}

#[test]
fn truncated_artifact_refuses_to_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let text = pinned_model().unwrap().to_json();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    let err = PricingService::load(&path).unwrap_err();
    assert!(matches!(err, ServiceError::Artifact { .. }), "{err}");
    assert!(err.to_string().contains("model.json"));
}

#[test]
fn port_in_use_is_a_startup_error() {
    let server = start();
    let addr = server.base.trim_start_matches("http://").to_string();
    let svc = Arc::new(PricingService::new(pinned_model().unwrap()).unwrap());
    let rt = tokio::runtime::Runtime::new().unwrap();
    let err = rt.block_on(Server::bind(svc, &addr)).err().unwrap();
    assert!(matches!(err, ServiceError::Bind { .. }));
}

#[test]
fn shuffled_sequence_gives_same_multiset() {
    let svc = PricingService::new(pinned_model().unwrap()).unwrap();
    let requests: Vec<Value> = (0..50).map(|i| payload((i % 5 + 1) as u8, (i * 3 % 5 + 1) as u8)).collect();
    let run = |order: &[usize]| -> HashMap<String, usize> {
        let mut counts = HashMap::new();
        for &i in order {
            let mut r = svc.handle_predict_json(&requests[i]).unwrap();
            r.latency_micros = 0;
            *counts.entry(serde_json::to_string(&r).unwrap()).or_insert(0) += 1;
        }
        counts
    };
    let forward: Vec<usize> = (0..50).collect();
    let shuffled: Vec<usize> = (0..50).map(|i| (i * 17 + 5) % 50).collect();
    assert_eq!(run(&forward), run(&shuffled));
}

#[test]
fn figure_payload_golden() {
    let svc = PricingService::new(pinned_model().unwrap()).unwrap();
    let r = svc
        .handle_predict(br#"{"client_revenue": 1000000, "duration_weeks": 8, "integ_complexity": 4, "pain_score": 3, "phase": 1, "tech_stack": "custom"}"#)
        .unwrap();
    assert!((r.predicted_price - FIGURE_PAYLOAD_PRICE).abs() < 1e-6, "{}", r.predicted_price);
}

// Pinned after the first training run of the reference model.
const FIGURE_PAYLOAD_PRICE: f64 = 7_040.390_442_891_35;

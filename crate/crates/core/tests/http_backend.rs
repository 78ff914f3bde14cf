mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use ctrlsimp::inference::{
    infer_run, multi_run, read_manifest, DegenerateThresholds, EndpointConfig, HttpBackend, InferenceError,
    MultiRunOptions, PromptSource, RunFileStatus, RunStatus,
};
use ctrlsimp::promptgen::{PromptBuilder, PromptRecord};
use ctrlsimp::textmetrics::AttributeKind;
use serde_json::{json, Value};

/// How the fake endpoint answers the n-th request (0-based).
type Script = fn(usize) -> StatusCode;

struct Server {
    script: Script,
    delay: Duration,
    hits: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    bodies: Mutex<Vec<(Value, Option<String>)>>,
}

async fn handle(State(s): State<Arc<Server>>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = s.hits.fetch_add(1, Ordering::SeqCst);
    let now = s.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    s.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let auth = headers.get("authorization").and_then(|v| v.to_str().ok()).map(str::to_string);
    s.bodies.lock().unwrap().push((body, auth));
    tokio::time::sleep(s.delay).await;
    s.in_flight.fetch_sub(1, Ordering::SeqCst);
    let status = (s.script)(n);
    let reply = json!({"choices": [{"message": {"role": "assistant", "content": format!("<FKGL=5.0> reply {n}")}}]});
    (status, Json(reply))
}

async fn serve(script: Script, delay: Duration) -> (String, Arc<Server>) {
    let state = Arc::new(Server {
        script,
        delay,
        hits: AtomicUsize::new(0),
        in_flight: AtomicUsize::new(0),
        max_in_flight: AtomicUsize::new(0),
        bodies: Mutex::new(Vec::new()),
    });
    let app = Router::new().route("/v1/chat/completions", post(handle)).with_state(state.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), state)
}

fn config(base_url: String) -> EndpointConfig {
    EndpointConfig {
        base_url,
        model_name: "test-model".into(),
        api_key: Some("sk-test".into()),
        timeout: 5.0,
        max_retries: 3,
        max_in_flight: 4,
        temperature: 0.0,
        max_tokens: 64,
        initial_backoff_ms: 1,
    }
}

fn prompts(n: usize) -> Vec<PromptRecord> {
    let pairs: Vec<_> = common::synthetic(n, 1)
        .into_iter()
        .enumerate()
        .map(|(i, mut p)| {
            p.source_text = format!("The committee postponed decision number {i} until further notice.");
            p.reference_text = format!("The group delayed choice {i}.");
            p
        })
        .collect();
    PromptBuilder::default().build_all(&pairs, AttributeKind::Fkgl, 0).unwrap()
}

async fn run(cfg: &EndpointConfig, prompts: &[PromptRecord]) -> Result<Vec<ctrlsimp::inference::RunOutput>, InferenceError> {
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    infer_run(prompts, &backend, cfg, &DegenerateThresholds::default(), 37).await
}

#[tokio::test(flavor = "multi_thread")]
async fn retries_server_errors_then_succeeds() {
    let (url, s) = serve(|n| if n < 2 { StatusCode::INTERNAL_SERVER_ERROR } else { StatusCode::OK }, Duration::ZERO).await;
    let rows = run(&config(url), &prompts(1)).await.unwrap();
    assert_eq!(rows[0].status, RunStatus::Ok);
    assert_eq!(rows[0].raw_text, "<FKGL=5.0> reply 2");
    assert_eq!(s.hits.load(Ordering::SeqCst), 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn retries_rate_limits() {
    let (url, s) = serve(|n| if n == 0 { StatusCode::TOO_MANY_REQUESTS } else { StatusCode::OK }, Duration::ZERO).await;
    let rows = run(&config(url), &prompts(1)).await.unwrap();
    assert_eq!(rows[0].status, RunStatus::Ok);
    assert_eq!(s.hits.load(Ordering::SeqCst), 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn exhausted_retries_become_an_error_row() {
    let (url, s) = serve(|_| StatusCode::SERVICE_UNAVAILABLE, Duration::ZERO).await;
    let rows = run(&config(url), &prompts(1)).await.unwrap();
    assert_eq!(rows[0].status, RunStatus::Error);
    assert!(rows[0].error.as_deref().unwrap().contains("4 attempts"));
    assert_eq!(s.hits.load(Ordering::SeqCst), 4);
}

#[tokio::test(flavor = "multi_thread")]
async fn client_error_fails_one_prompt_only() {
    let (url, s) = serve(|n| if n == 0 { StatusCode::BAD_REQUEST } else { StatusCode::OK }, Duration::ZERO).await;
    let mut cfg = config(url);
    cfg.max_in_flight = 1;
    let rows = run(&cfg, &prompts(3)).await.unwrap();
    let statuses: Vec<RunStatus> = rows.iter().map(|r| r.status).collect();
    assert_eq!(statuses, vec![RunStatus::Error, RunStatus::Ok, RunStatus::Ok]);
    assert!(rows[0].error.as_deref().unwrap().contains("400"));
    assert_eq!(s.hits.load(Ordering::SeqCst), 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn unauthorized_aborts_and_marks_runs_missing() {
    let (url, _) = serve(|_| StatusCode::UNAUTHORIZED, Duration::ZERO).await;
    let cfg = config(url);
    let p = prompts(2);
    assert!(matches!(run(&cfg, &p).await, Err(InferenceError::Auth(_))));

    let dir = tempfile::tempdir().unwrap();
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let source = PromptSource {
        name: "prompts.jsonl".into(),
        sha256: "0".repeat(64),
    };
    let err = multi_run(
        &p,
        &source,
        &backend,
        &cfg,
        &DegenerateThresholds::default(),
        &[37, 15, 96],
        dir.path(),
        MultiRunOptions::default(),
    )
    .await
    .unwrap_err();
    assert!(matches!(err, InferenceError::Auth(_)));
    let manifest = read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.runs.len(), 3);
    assert!(manifest.runs.iter().all(|r| r.status == RunFileStatus::Missing));
    let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(!text.contains("sk-test"));
}

#[tokio::test(flavor = "multi_thread")]
async fn slow_endpoint_times_out() {
    let (url, _) = serve(|_| StatusCode::OK, Duration::from_millis(1500)).await;
    let mut cfg = config(url);
    cfg.timeout = 0.2;
    cfg.max_retries = 0;
    let rows = run(&cfg, &prompts(1)).await.unwrap();
    assert_eq!(rows[0].status, RunStatus::Error);
}

#[tokio::test(flavor = "multi_thread")]
async fn request_body_and_auth_header() {
    let (url, s) = serve(|_| StatusCode::OK, Duration::ZERO).await;
    let p = prompts(1);
    run(&config(url), &p).await.unwrap();
    let bodies = s.bodies.lock().unwrap();
    let (body, auth) = &bodies[0];
    assert_eq!(auth.as_deref(), Some("Bearer sk-test"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 64);
    assert_eq!(body["seed"], 37);
    let messages = body["messages"].as_array().unwrap();
    let roles: Vec<&str> = messages.iter().map(|m| m["role"].as_str().unwrap()).collect();
    assert_eq!(roles, vec!["system", "user"]);
    assert_eq!(messages[1]["content"], p[0].user_content());
}

#[tokio::test(flavor = "multi_thread")]
async fn in_flight_requests_stay_bounded() {
    let (url, s) = serve(|_| StatusCode::OK, Duration::from_millis(30)).await;
    let mut cfg = config(url);
    cfg.max_in_flight = 3;
    let p = prompts(24);
    let rows = run(&cfg, &p).await.unwrap();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().zip(&p).all(|(r, q)| r.pair_id == q.pair_id));
    let peak = s.max_in_flight.load(Ordering::SeqCst);
    assert!((1..=3).contains(&peak), "peak {peak}");
}

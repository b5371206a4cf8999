use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;
use webglm_core::config::Settings;
use webglm_core::model::{parse_answer_markup, validate_citations};
use webglm_service::{router, AppState, AskResponse};

fn stub_settings(llm: &str) -> Settings {
    let mut s = Settings::default();
    s.search.provider = "stub".into();
    s.fetch.source = "stub".into();
    s.llm.model = Some(llm.into());
    s.service.frozen_clock = true;
    s
}

fn state(settings: &Settings) -> Arc<AppState> {
    Arc::new(AppState::from_settings(settings).unwrap())
}

async fn call(state: &Arc<AppState>, method: &str, uri: &str, body: &str) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    assert_eq!(resp.headers()["content-type"], "application/json");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn ask(state: &Arc<AppState>, body: &str) -> (StatusCode, String) {
    call(state, "POST", "/ask", body).await
}

fn check(body: &str) -> AskResponse {
    let r: AskResponse = serde_json::from_str(body).unwrap();
    let answer = webglm_core::Answer::new(r.segments.clone());
    assert!(validate_citations(&answer, r.references.len()).is_empty());
    assert_eq!(parse_answer_markup(&r.answer), answer);
    assert!(r.references.iter().all(|x| !x.url.is_empty()));
    r
}

const Q: &str = r#"{"question": "How do solar panels generate electricity?"}"#;

#[tokio::test]
async fn stub_stack_is_byte_identical_across_states() {
    let s = stub_settings("stub:quote");
    let (a, b) = (state(&s), state(&s));
    let (sa, ba) = ask(&a, Q).await;
    let (sb, bb) = ask(&b, Q).await;
    assert_eq!((sa, sb), (StatusCode::OK, StatusCode::OK));
    assert_eq!(ba, bb);
    let r = check(&ba);
    assert_eq!(r.scores.len(), 4);
    assert!(r.references.len() <= 5);
    assert!(r.scores[r.chosen] >= r.scores.iter().cloned().fold(f64::MIN, f64::max));
}

#[tokio::test]
async fn concurrent_identical_requests_agree() {
    let st = state(&stub_settings("stub:quote"));
    let bodies = futures::future::join_all((0..8).map(|_| ask(&st, Q))).await;
    assert!(bodies.iter().all(|b| b == &bodies[0] && b.0 == StatusCode::OK));
}

#[tokio::test]
async fn out_of_range_citations_are_corrected() {
    let st = state(&stub_settings("stub:miscite"));
    let (status, body) = ask(&st, Q).await;
    assert_eq!(status, StatusCode::OK);
    let r = check(&body);
    assert!(!r.answer.is_empty());
}

#[tokio::test]
async fn single_candidate_and_top_k() {
    let st = state(&stub_settings("stub:quote"));
    let (status, body) = ask(&st, r#"{"question": "Why is the sky blue?", "n_candidates": 1, "top_k": 2}"#).await;
    assert_eq!(status, StatusCode::OK);
    let r = check(&body);
    assert_eq!(r.scores.len(), 1);
    assert_eq!(r.chosen, 0);
    assert_eq!(r.references.len(), 2);
}

#[tokio::test]
async fn error_codes_and_log_lines() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("queries.jsonl");
    let mut s = stub_settings("stub:quote");
    s.service.log_path = Some(log.clone());
    let st = state(&s);
    let mut served = 0;

    let (status, body) = ask(&st, r#"{"question": ""}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body, r#"{"error":"empty_question"}"#);
    let (status, _) = ask(&st, "{").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    for _ in 0..3 {
        assert_eq!(ask(&st, Q).await.0, StatusCode::OK);
        served += 1;
    }

    let mut t = stub_settings("stub:timeout");
    t.service.log_path = Some(log.clone());
    let (status, body) = ask(&state(&t), Q).await;
    assert_eq!(status, StatusCode::GATEWAY_TIMEOUT);
    assert_eq!(body, r#"{"error":"generator_timeout"}"#);
    served += 1;

    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), served);
    assert!(lines.iter().all(|l| l["timestamp"].is_number() && l["request"]["question"].is_string()));
    assert!(lines[0]["response"]["answer"].is_string());
    assert_eq!(lines[3]["error"]["code"], "generator_timeout");
}

#[tokio::test]
async fn rate_limited_generator_is_bad_gateway() {
    let (status, body) = ask(&state(&stub_settings("stub:ratelimit")), Q).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body, r#"{"error":"generator_failed"}"#);
}

#[tokio::test]
async fn unreachable_search_is_bad_gateway() {
    let mut s = stub_settings("stub:quote");
    s.search.provider = "http:http://127.0.0.1:9/search".into();
    let (status, body) = ask(&state(&s), Q).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body, r#"{"error":"search_failed"}"#);
}

#[tokio::test]
async fn empty_search_has_no_references() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("search.json");
    std::fs::write(&fixture, "{}").unwrap();
    let mut s = stub_settings("stub:quote");
    s.search.provider = format!("fixture:{}", fixture.display());
    let (status, body) = ask(&state(&s), Q).await;
    assert_eq!(status, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(body, r#"{"error":"no_references"}"#);
}

#[tokio::test]
async fn health_reports_each_backend() {
    let st = state(&stub_settings("stub"));
    let start = Instant::now();
    let (status, body) = call(&st, "GET", "/health", "").await;
    assert!(start.elapsed().as_secs_f64() < 0.1);
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, r#"{"search":"ok","llm":"ok","scorer":"ok"}"#);

    let mut s = stub_settings("stub");
    s.llm.model = None;
    let (_, body) = call(&state(&s), "GET", "/health", "").await;
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["llm"], "unconfigured");
}

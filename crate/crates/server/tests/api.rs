mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lyricist::api::{router, AppState};
use lyricist_core::store::Store;
use lyricist_core::Engine;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &std::path::Path) -> Router {
    let cfg = common::config();
    router(AppState {
        engine: Arc::new(Engine::with_ngram(common::bundle())),
        store: Arc::new(Store::open(dir).unwrap()),
        defaults: cfg.generation.clone(),
        timeout: Duration::from_secs(30),
    })
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

fn spec() -> Value {
    json!({
        "style": "Folk",
        "emotion": "positive",
        "keywords": ["snow"],
        "rhyme_group": "nasal",
        "num_lines": 4,
        "words_per_line": 10,
    })
}

fn with(mut v: Value, extra: Value) -> Value {
    for (k, x) in extra.as_object().unwrap() {
        v[k] = x.clone();
    }
    v
}

#[tokio::test]
async fn health_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, v) = call(&app, "GET", "/api/health", None).await;
    assert_eq!((s, v["status"].as_str()), (StatusCode::OK, Some("ok")));
    let (s, v) = call(&app, "GET", "/api/meta", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["styles"].as_array().unwrap().len(), 4);
    assert_eq!(v["emotions"], json!(["positive", "negative", "neutral"]));
    assert!(v["themes"].as_array().unwrap().iter().any(|t| t == "campus"));
    assert_eq!(v["backend"], "ngram");
    assert_eq!(v["defaults"]["n_candidates"], 3);
}

#[tokio::test]
async fn generate_echoes_seed_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let body = with(spec(), json!({"seed": 11}));
    let (s, a) = call(&app, "POST", "/api/generate", Some(body.clone())).await;
    assert_eq!(s, StatusCode::OK, "{a}");
    let (_, b) = call(&app, "POST", "/api/generate", Some(body)).await;
    assert_eq!(a, b);
    assert_eq!(a["seed"], 11);
    assert_eq!(a["request"]["seed"], 11);
    let cands = a["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 3);
    for c in cands {
        assert_eq!(c["lyrics"].as_array().unwrap().len(), 4);
        for k in ["s_kh", "s_sr", "s_div", "s_rank"] {
            assert!(c["scores"][k].is_number(), "{c}");
        }
    }
    let (_, drawn) = call(&app, "POST", "/api/generate", Some(spec())).await;
    let seed = drawn["seed"].as_u64().unwrap();
    assert!(seed < 1 << 53);
    let (_, replay) = call(&app, "POST", "/api/generate", Some(with(spec(), json!({"seed": seed})))).await;
    assert_eq!(replay["candidates"], drawn["candidates"]);
}

#[tokio::test]
async fn continue_keeps_preceding_lines() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let preceding = ["The snow glows white on the mountain", "Not a footprint to be seen"];
    let body = with(spec(), json!({"preceding": preceding, "k_lines": 2, "seed": 3}));
    let (s, v) = call(&app, "POST", "/api/continue", Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["preceding"], json!(preceding));
    for c in v["candidates"].as_array().unwrap() {
        assert_eq!(c["lyrics"].as_array().unwrap().len(), 2);
    }
    let bad = with(spec(), json!({"preceding": preceding, "k_lines": 3}));
    let (s, v) = call(&app, "POST", "/api/continue", Some(bad)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "validation_error");
}

#[tokio::test]
async fn revise_returns_ranked_suggestions() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let lyrics = ["The snow glows white on the mountain", "Not a footprint to be seen"];
    let body = json!({"lyrics": lyrics, "span": {"line": 1, "start": 6, "end": 15}, "style": "Folk", "seed": 1});
    let (s, v) = call(&app, "POST", "/api/revise", Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["original"], "footprint");
    let scores: Vec<f64> = v["suggestions"].as_array().unwrap().iter().map(|s| s["score"].as_f64().unwrap()).collect();
    assert!(!scores.is_empty());
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    let (s, _) = call(&app, "POST", "/api/revise", Some(json!({"lyrics": lyrics, "span": {"line": 9}, "style": "Folk"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn errors_have_codes_and_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let cases = [
        (with(spec(), json!({"style": "Opera"})), StatusCode::BAD_REQUEST, "validation_error", Some("style")),
        (with(spec(), json!({"num_lines": 0})), StatusCode::BAD_REQUEST, "validation_error", Some("num_lines")),
        (with(spec(), json!({"theme": "space"})), StatusCode::BAD_REQUEST, "validation_error", Some("theme")),
        (with(spec(), json!({"rhyme_group": "zzz"})), StatusCode::BAD_REQUEST, "validation_error", Some("rhyme_group")),
        (with(spec(), json!({"acrostic": ["Q", "Q", "Q", "Q"]})), StatusCode::UNPROCESSABLE_ENTITY, "constraint_unsatisfiable", Some("acrostic")),
        (with(spec(), json!({"acrostic": ["a"]})), StatusCode::BAD_REQUEST, "validation_error", Some("acrostic")),
        (json!({"style": "Folk"}), StatusCode::BAD_REQUEST, "invalid_body", None),
    ];
    for (body, status, code, field) in cases {
        let (s, v) = call(&app, "POST", "/api/generate", Some(body.clone())).await;
        assert_eq!(s, status, "{body} -> {v}");
        assert_eq!(v["error"]["code"], code, "{v}");
        assert!(v["error"]["message"].as_str().is_some_and(|m| !m.is_empty()));
        if let Some(f) = field {
            assert_eq!(v["error"]["field"], f, "{v}");
        }
    }
    let req = Request::builder().method("POST").uri("/api/generate").header("content-type", "application/json");
    let resp = app.clone().oneshot(req.body(Body::from("{not json")).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn drafts_crud_and_restore() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, d) = call(&app, "POST", "/api/drafts", Some(json!({"title": "winter"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    let id = d["id"].as_str().unwrap().to_string();
    let texts = [["first line"], ["second line"], ["third line"]];
    for (i, t) in texts.iter().enumerate() {
        let prov = if i == 0 { "full_text" } else { "manual_edit" };
        let body = json!({"lyrics": t, "provenance": prov, "spec": if i == 0 { spec() } else { Value::Null }});
        let (s, v) = call(&app, "POST", &format!("/api/drafts/{id}/versions"), Some(body)).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        assert_eq!(v["number"], i + 1);
    }
    let (s, v) = call(&app, "POST", &format!("/api/drafts/{id}/versions/1/restore"), None).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["number"], 4);
    assert_eq!(v["restored_from"], 1);
    let (_, v1) = call(&app, "GET", &format!("/api/drafts/{id}/versions/1"), None).await;
    assert_eq!(v["lyrics"], v1["lyrics"]);
    assert_eq!(v["spec"], v1["spec"]);
    let (_, draft) = call(&app, "GET", &format!("/api/drafts/{id}"), None).await;
    assert_eq!(draft["title"], "winter");
    assert_eq!(draft["versions"].as_array().unwrap().len(), 4);
    let (_, list) = call(&app, "GET", "/api/drafts", None).await;
    assert_eq!(list["drafts"][0]["latest_version"], 4);

    let (s, v) = call(&app, "GET", "/api/drafts/nope", None).await;
    assert_eq!((s, v["error"]["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
    let (s, _) = call(&app, "GET", &format!("/api/drafts/{id}/versions/9"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "POST", &format!("/api/drafts/{id}/versions"), Some(json!({"lyrics": ["x"], "provenance": "magic"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn slow_generation_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::config();
    let app = router(AppState {
        engine: Arc::new(Engine::with_ngram(common::bundle())),
        store: Arc::new(Store::open(dir.path()).unwrap()),
        defaults: cfg.generation.clone(),
        timeout: Duration::from_nanos(1),
    });
    let body = with(spec(), json!({"num_lines": 40, "n_candidates": 20}));
    let (s, v) = call(&app, "POST", "/api/generate", Some(body)).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE, "{v}");
    assert_eq!(v["error"]["code"], "timeout");
}

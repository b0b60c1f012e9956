use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use base64::Engine as _;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use tempered::envelope::{preset, ParamBounds, Preset, Unit};
use tempered::reward::{wav, Engine};
use tempered::service::Service;
use tempered_cli::server::router;

async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: Method, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, serde_json::to_vec(&body).unwrap()).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn taps(n: u64) -> Value {
    let entries: Vec<Value> = (0..n)
        .map(|k| json!({ "timestamp_ms": k * 250, "lane": k % 5, "intensity": 0.6, "outcome": "hit" }))
        .collect();
    json!({ "entries": entries })
}

fn app() -> Router {
    router(Service::new(Engine::default(), 5))
}

#[tokio::test]
async fn full_session_round_trip() {
    let app = app();
    let (s, created) = call_json(&app, Method::POST, "/sessions", json!(null)).await;
    assert_eq!(s, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_string();
    assert_eq!(created["config_name"], "default");

    let (s, body) = call_json(&app, Method::POST, &format!("/sessions/{id}/taps"), taps(200)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["tap_count"], 200);
    let (_, state) = call_json(&app, Method::GET, &format!("/sessions/{id}"), json!(null)).await;
    assert_eq!(state["entries"].as_array().unwrap().len(), 200);
    assert!(state["features"]["tap_rate"].is_string() || state["features"]["tap_rate"].is_number());

    let (s, raw) = call(&app, Method::POST, &format!("/sessions/{id}/finalize"), r#"{"seed":"17"}"#).await;
    assert_eq!(s, StatusCode::OK);
    let fin: Value = serde_json::from_slice(&raw).unwrap();
    let report = &fin["report"];
    assert_eq!(report["seed"], "17");
    // 200 taps/min -> 140 BPM requested, clamped to the Default upper bound.
    assert_eq!(report["clamp_records"][0]["bound_hit"], "upper");
    let audio = base64::engine::general_purpose::STANDARD.decode(fin["audio_wav_base64"].as_str().unwrap()).unwrap();
    assert_eq!(wav::read_from(&audio[..]).unwrap().digest(), report["audio_digest_constrained"].as_str().unwrap());

    // The stored report is the canonical document.
    let (s, stored) = call(&app, Method::GET, &format!("/reports/{id}"), Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    let parsed = tempered::deserialize_report(&stored).unwrap();
    assert_eq!(tempered::serialize_report(&parsed), stored);

    let (_, list) = call_json(&app, Method::GET, "/reports", json!(null)).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["clamped"][0], "tempo");

    let (s, wav_bytes) = call(&app, Method::GET, &format!("/reports/{id}/audio?condition=baseline"), Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(wav::read_from(&wav_bytes[..]).unwrap().digest(), parsed.audio_digest_baseline);
    let (s, _) = call(&app, Method::GET, &format!("/reports/{id}/audio?condition=loud"), Body::empty()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, lo) = call_json(&app, Method::GET, &format!("/reports/{id}/loudness"), json!(null)).await;
    assert_eq!(s, StatusCode::OK);
    assert!(!lo["constrained"]["momentary_lufs"].as_array().unwrap().is_empty());

    let (s, again) = call_json(&app, Method::POST, &format!("/sessions/{id}/finalize"), json!({})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(again["error"], "finalized");
}

#[tokio::test]
async fn tuning_is_validated_against_the_meta_envelope() {
    let app = app();
    let (s, cfg) = call(&app, Method::GET, "/config", Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(cfg, preset(Preset::Default).to_canonical());

    let mut wide = preset(Preset::Default);
    wide.name = "wide".into();
    wide.tempo = ParamBounds::new(100.0, 140.0, Unit::Bpm);
    let (s, body) = call(&app, Method::PUT, "/config", wide.to_canonical()).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["event"]["status"], "accepted");
    assert_eq!(v["active_config_hash"], tempered::config_hash(&wide));

    let mut loud = wide.clone();
    loud.name = "loud".into();
    loud.gain = ParamBounds::new(-10.0, 3.0, Unit::Db);
    let (s, body) = call(&app, Method::PUT, "/config", loud.to_canonical()).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["event"]["status"], "rejected");
    assert_eq!(v["event"]["excess"][0]["parameter"], "gain");
    assert_eq!(v["event"]["excess"][0]["amount"], 3.0);
    assert_eq!(v["active_config_hash"], tempered::config_hash(&wide));

    let (s, _) = call(&app, Method::PUT, "/config", "{\"name\":1}").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (_, log) = call_json(&app, Method::GET, "/tuning-events", json!(null)).await;
    assert_eq!(log.as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn bad_requests_map_to_statuses() {
    let app = app();
    let (s, _) = call_json(&app, Method::POST, "/sessions/none/taps", taps(1)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (_, created) = call_json(&app, Method::POST, "/sessions", json!(null)).await;
    let id = created["session_id"].as_str().unwrap().to_string();
    let (s, v) = call_json(
        &app,
        Method::POST,
        &format!("/sessions/{id}/taps"),
        json!({ "entries": [{ "timestamp_ms": 61_000, "lane": 0, "intensity": 0.5, "outcome": "hit" }] }),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "session_expired");
    let (s, _) = call(&app, Method::POST, &format!("/sessions/{id}/taps"), "{\"entries\":[{\"lane\":-1}]}").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/finalize"), json!({})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "empty_trace");
    let (s, _) = call(&app, Method::GET, "/reports/none", Body::empty()).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

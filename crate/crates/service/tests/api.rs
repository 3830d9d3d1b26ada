use std::sync::Arc;

use acme_ad::dataset::{load_csv, CsvOptions, QuantileGrid};
use acme_ad::explainer::{Explainer, LocalExplanation, Weights};
use acme_ad::model::{Detector, IsolationForest, IsolationForestParams, ThresholdRule};
use acme_ad_service::{router, AppState};
use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn glass_path() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/glass.csv")
}

fn app() -> Router {
    router(AppState::default())
}

struct Reply {
    status: StatusCode,
    location: Option<String>,
    body: Value,
}

async fn send(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> Reply {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let location = res
        .headers()
        .get(header::LOCATION)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    Reply { status, location, body }
}

async fn post_json(app: &Router, uri: &str, body: Value) -> Reply {
    send(app, "POST", uri, body.to_string()).await
}

async fn upload_glass(app: &Router) -> u64 {
    let csv = std::fs::read(glass_path()).unwrap();
    let r = send(app, "POST", "/datasets?label=label&meta=type&quantiles=70", csv).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    r.body["id"].as_u64().unwrap()
}

fn glass_params() -> Value {
    json!({"trees": 100, "psi": 32, "threshold": 0.5, "seed": 0})
}

async fn glass_model(app: &Router) -> (u64, u64) {
    let ds = upload_glass(app).await;
    let r = post_json(app, "/models", json!({"dataset_id": ds, "params": glass_params()})).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    (ds, r.body["id"].as_u64().unwrap())
}

#[tokio::test]
async fn dataset_upload_reports_profile() {
    let app = app();
    let csv = std::fs::read(glass_path()).unwrap();
    let r = send(&app, "POST", "/datasets?label=label&meta=type", csv.clone()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.body["profile"]["n_rows"], 213);
    assert_eq!(r.body["profile"]["n_features"], 9);
    assert_eq!(r.body["quantiles"], 70);
    let again = send(&app, "POST", "/datasets?label=label&meta=type", csv).await;
    assert_ne!(again.body["id"], r.body["id"]);
}

#[tokio::test]
async fn malformed_uploads_are_bad_requests() {
    let app = app();
    let r = send(&app, "POST", "/datasets", Body::empty()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["code"], "bad_request");
    assert!(r.body["message"].as_str().unwrap().len() > 3);

    let r = send(&app, "POST", "/datasets", "a,b\n1\n").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn model_training_validates_and_is_deterministic() {
    let app = app();
    let ds = upload_glass(&app).await;
    let bad = post_json(&app, "/models", json!({"dataset_id": ds, "params": {"psi": 1}})).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    let missing = post_json(&app, "/models", json!({"dataset_id": 999})).await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);

    let a = post_json(&app, "/models", json!({"dataset_id": ds, "params": glass_params()})).await;
    let b = post_json(&app, "/models", json!({"dataset_id": ds, "params": glass_params()})).await;
    assert_eq!(a.body["threshold"], 0.5);
    assert_eq!(a.body["metrics"], b.body["metrics"]);
    let f1 = a.body["metrics"]["f1"].as_f64().unwrap();
    assert!((f1 - 0.7706).abs() < 0.1, "f1 {f1}");
}

#[tokio::test]
async fn explanation_errors() {
    let app = app();
    let (_, model) = glass_model(&app).await;
    let r = post_json(&app, "/explanations", json!({"model_id": 12345, "row": 0})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.body["code"], "not_found");

    let w = json!({"w_D": 0.3, "w_C": 0.3, "w_Q": 0.2, "w_R": 0.1});
    let r = post_json(&app, "/explanations", json!({"model_id": model, "row": 0, "weights": w})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.body["code"], "invalid_weights");

    let r = post_json(&app, "/explanations", json!({"model_id": model})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post_json(&app, "/explanations", json!({"model_id": model, "row": 999})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post_json(&app, "/explanations", json!({"model_id": model, "point": [1.0, 2.0]})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

/// The same explanation computed directly with the engine.
fn engine_explanation(row: usize, weights: Weights) -> LocalExplanation {
    let data = load_csv(glass_path(), &CsvOptions::labelled("label").with_meta("type"))
        .unwrap()
        .dataset;
    let forest = IsolationForest::fit(&data, IsolationForestParams::new(100, 32, 0)).unwrap();
    let detector = Detector::calibrate(forest, &data, ThresholdRule::Fixed(0.5)).unwrap();
    let grid = QuantileGrid::build(&data, 70).unwrap();
    Explainer::from_detector(&detector, &grid)
        .explain_local(data.row(row), weights)
        .unwrap()
}

#[tokio::test]
async fn payload_matches_engine_and_reweighting_skips_the_scorer() {
    let app = app();
    let (_, model) = glass_model(&app).await;
    let first = post_json(&app, "/explanations", json!({"model_id": model, "row": 190})).await;
    assert_eq!(first.status, StatusCode::CREATED);
    let expected = serde_json::to_value(engine_explanation(190, Weights::default())).unwrap();
    assert_eq!(first.body, expected);

    let calls = send(&app, "GET", &format!("/models/{model}"), Body::empty()).await.body["scorer_calls"].clone();
    let unit = json!({"w_D": 1.0, "w_C": 0.0, "w_Q": 0.0, "w_R": 0.0});
    let second = post_json(&app, "/explanations", json!({"model_id": model, "row": 190, "weights": unit})).await;
    let after = send(&app, "GET", &format!("/models/{model}"), Body::empty()).await.body["scorer_calls"].clone();
    assert_eq!(calls, after);

    let reweighted = serde_json::to_value(engine_explanation(190, Weights::DELTA_ONLY)).unwrap();
    assert_eq!(second.body, reweighted);

    // Unit weight on D orders features by D.
    let e: LocalExplanation = serde_json::from_value(second.body).unwrap();
    let d: Vec<f64> = e.features.iter().map(|f| f.delta).collect();
    let ranking = e.ranking();
    assert!(ranking.windows(2).all(|w| d[w[0]] > d[w[1]] || (d[w[0]] == d[w[1]] && w[0] < w[1])));

    let stored = send(&app, "GET", first.location.as_deref().unwrap(), Body::empty()).await;
    assert_eq!(stored.body, expected);
}

#[tokio::test]
async fn raw_points_and_quantile_override() {
    let app = app();
    let (_, model) = glass_model(&app).await;
    let point = [1.52, 13.0, 0.0, 2.5, 72.0, 0.0, 8.5, 1.5, 0.0];
    let r = post_json(&app, "/explanations", json!({"model_id": model, "point": point, "Q": 5})).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    let perturbations = r.body["features"][0]["perturbations"].as_array().unwrap();
    assert_eq!(perturbations.len(), 5);
}

#[tokio::test]
async fn class_seven_sample_can_flip_through_al() {
    let app = app();
    let (_, model) = glass_model(&app).await;
    let data = load_csv(glass_path(), &CsvOptions::labelled("label").with_meta("type"))
        .unwrap()
        .dataset;
    let type7: Vec<usize> = data
        .meta("type")
        .unwrap()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.as_str() == "7")
        .map(|(i, _)| i)
        .collect();
    let mut al_flips = 0;
    for &row in &type7 {
        let r = post_json(&app, "/explanations", json!({"model_id": model, "row": row})).await;
        let e: LocalExplanation = serde_json::from_value(r.body).unwrap();
        if e.is_anomalous() && e.feature("Al").unwrap().change == 1 {
            al_flips += 1;
        }
    }
    assert!(al_flips > 0);
}

#[tokio::test]
async fn global_endpoints_agree() {
    let app = app();
    let (_, model) = glass_model(&app).await;
    let g = send(&app, "GET", &format!("/models/{model}/global"), Body::empty()).await;
    assert_eq!(g.status, StatusCode::OK);
    let scores = g.body["scores"].as_array().unwrap();
    assert_eq!(scores.len(), 9);
    let share_sum: f64 = scores.iter().map(|s| s["share"].as_f64().unwrap()).sum();
    assert!((share_sum - 1.0).abs() < 1e-12);
    let totals: Vec<f64> = scores.iter().map(|s| s["T"].as_f64().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[0] >= w[1]));

    let e = post_json(&app, "/explanations", json!({"model_id": model, "row": 190})).await;
    let via_explanation = send(&app, "GET", &format!("{}/global", e.location.unwrap()), Body::empty()).await;
    assert_eq!(via_explanation.body, g.body);

    let unit = send(&app, "GET", &format!("/models/{model}/global?weights=0,1,0,0"), Body::empty()).await;
    assert_eq!(unit.status, StatusCode::OK);
    assert_ne!(unit.body, g.body);
    let bad = send(&app, "GET", &format!("/models/{model}/global?weights=1,1,0,0"), Body::empty()).await;
    assert_eq!(bad.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn deleted_models_are_gone() {
    let state = AppState::default();
    let app = router(Arc::clone(&state));
    let (ds, model) = glass_model(&app).await;
    assert_eq!(send(&app, "DELETE", &format!("/models/{model}"), Body::empty()).await.status, StatusCode::NO_CONTENT);
    assert_eq!(send(&app, "GET", &format!("/models/{model}"), Body::empty()).await.status, StatusCode::NOT_FOUND);
    assert_eq!(send(&app, "DELETE", &format!("/datasets/{ds}"), Body::empty()).await.status, StatusCode::NO_CONTENT);
    assert!(state.dataset(ds).is_none());
}

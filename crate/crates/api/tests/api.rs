use std::process::Command;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(method: &str, path: &str, body: &str) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header("content-type", "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap();
    let resp = bayescreen_api::router().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(path: &str, body: Value) -> (StatusCode, Value) {
    let (status, text) = call("POST", path, &body.to_string()).await;
    (status, serde_json::from_str(&text).unwrap())
}

#[tokio::test]
async fn pretest_combines_named_findings() {
    let (status, v) = post(
        "/v1/pretest",
        json!({"findings": [{"label": "fever", "kappa": 2}, {"label": "rash", "kappa": 5}]}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let min = v["result"]["min_bound"].as_f64().unwrap();
    assert!((min - 0.4605).abs() <= 5e-4, "{min}");
    assert_eq!(v["command"], "pretest");
    assert_eq!(v["inputs"]["findings"][0]["label"], "fever");
}

#[tokio::test]
async fn pretest_reports_threshold_comparison() {
    let (status, v) = post(
        "/v1/pretest",
        json!({"findings": [{"label": "a", "kappa": 3}], "sensitivity": 0.6, "specificity": 0.95}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(v["result"].to_string().contains("threshold"), "{v}");
}

#[tokio::test]
async fn posttest_with_unit_lr_returns_pretest() {
    let (status, v) = post("/v1/posttest", json!({"pretest": 0.5, "kappa": 1})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["result"]["posttest"].as_f64().unwrap(), 0.5);
}

#[tokio::test]
async fn threshold_accepts_short_names() {
    let (status, v) = post("/v1/threshold", json!({"sens": 0.6, "spec": 0.95})).await;
    assert_eq!(status, StatusCode::OK);
    let phi_e = v["result"]["prevalence_threshold"].as_f64().unwrap();
    assert!((phi_e - 0.2240).abs() <= 5e-4);
    assert_eq!(v["schema_version"], "1.0");
    assert!(v["version"].is_string());
}

#[tokio::test]
async fn malformed_bodies_are_400_with_field() {
    let (status, v) = post("/v1/threshold", json!({"sensitivity": "high", "specificity": 0.9})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedBody");
    assert_eq!(v["field"], "sensitivity");

    let (status, v) = post("/v1/threshold", json!({"sensitivity": 0.9})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["message"].as_str().unwrap().contains("specificity"));

    let (status, v) = post("/v1/threshold", json!({"sensitivity": 0.9, "specificity": 0.9, "extra": 1})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedBody");

    let (status, v) = post("/v1/pretest", json!({"findings": [{"label": "x", "kappa": "big"}]})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["field"], "findings[0].kappa");

    let (status, _) = call("POST", "/v1/ppv", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call("POST", "/v1/ppv", r#"{"sens":0.9,"spec":0.9,"pretest":0.1} trailing"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn out_of_range_values_are_400_naming_the_field() {
    let (status, v) = post("/v1/ppv", json!({"sensitivity": 1.2, "specificity": 0.9, "pretest": 0.1})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "OutOfRange");
    assert_eq!(v["field"], "sensitivity");

    let (status, v) = post("/v1/simulate", json!({"n": 100_000_000u64, "prevalence": 0.1, "sensitivity": 0.9, "specificity": 0.9})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "OutOfRange");
}

#[tokio::test]
async fn domain_errors_are_422_with_error_name() {
    let (status, v) = post("/v1/estimate/baxter", json!({"t": 5, "n": 100, "sens": 0.4, "spec": 0.5})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "UninformativeTest");

    let (status, v) = post("/v1/mcgee", json!({"pretest": 0.6, "target": 0.3})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "InvalidTarget");

    let (status, v) = post("/v1/estimate/rogan-gladen", json!({"t": 0, "n": 0, "sens": 0.9, "spec": 0.9})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "EmptyCohort");
}

#[tokio::test]
async fn densities_are_downsampled_and_keep_the_mode() {
    let (status, v) = post("/v1/estimate/beta", json!({"t": 7, "n": 40})).await;
    assert_eq!(status, StatusCode::OK);
    let d = &v["result"]["density"];
    let y: Vec<f64> = d["y"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(y.len() <= 512);
    assert_eq!(d["grid_size"], 2048);
    // Beta(8, 34) mode sits at 7/40.
    let x = d["x"].as_array().unwrap();
    let argmax = (0..y.len()).max_by(|&i, &j| y[i].total_cmp(&y[j])).unwrap();
    assert!((x[argmax].as_f64().unwrap() - 7.0 / 40.0).abs() < 1e-3);
}

#[tokio::test]
async fn nomogram_returns_coordinates_and_ticks() {
    let (status, v) = post("/v1/nomogram", json!({"pretest": 0.25, "kappa": 4})).await;
    assert_eq!(status, StatusCode::OK);
    assert!(v["result"]["axes"]["likelihood_ratio"].as_array().unwrap().len() > 5);
    // An infinite ratio has no position on the log axis.
    let (status, v) = post("/v1/nomogram", json!({"pretest": 0.25, "kappa": "infinite"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["field"], "kappa");
}

#[tokio::test]
async fn parameterless_endpoints_accept_empty_body() {
    let (status, text) = call("POST", "/v1/tables", "").await;
    assert_eq!(status, StatusCode::OK, "{text}");
    let (status, v) = post("/v1/audit", json!({"step": 0.01})).await;
    assert_eq!(status, StatusCode::OK);
    assert!(v["result"]["max_in_domain"].is_object());
}

#[tokio::test]
async fn health_and_spec() {
    let (status, text) = call("GET", "/v1/health", "").await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["version"], bayescreen::VERSION);

    let (status, text) = call("GET", "/v1/spec", "").await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&text).unwrap();
    for path in ["/v1/ppv", "/v1/pretest", "/v1/estimate/baxter-unknown", "/v1/tables", "/v1/health"] {
        assert!(v["paths"].get(path).is_some(), "{path}");
    }
}

#[tokio::test]
async fn identical_requests_get_identical_responses_in_any_order() {
    let bodies = [
        ("/v1/ppv", r#"{"sens":0.9,"spec":0.8,"pretest":0.3}"#),
        ("/v1/posttest", r#"{"pretest":0.2,"kappa":[3,"infinite"]}"#),
        ("/v1/simulate", r#"{"n":300,"prevalence":0.1,"sens":0.9,"spec":0.95,"seed":9,"replicates":4}"#),
    ];
    let mut first = Vec::new();
    for (p, b) in bodies {
        first.push(call("POST", p, b).await);
    }
    let handles: Vec<_> = bodies
        .iter()
        .rev()
        .map(|&(p, b)| tokio::spawn(async move { call("POST", p, b).await }))
        .collect();
    let mut second = Vec::new();
    for h in handles {
        second.push(h.await.unwrap());
    }
    second.reverse();
    assert_eq!(first, second);
}

#[tokio::test]
async fn api_matches_cli_output() {
    let Some(cli) = option_env!("CARGO_BIN_EXE_bayescreen").map(str::to_owned).or_else(cli_path) else {
        eprintln!("bayescreen binary not built; skipping");
        return;
    };
    let cases: &[(&str, Value, &[&str])] = &[
        ("/v1/threshold", json!({"sensitivity": 0.6, "specificity": 0.95}), &["threshold", "--sens", "0.6", "--spec", "0.95"]),
        ("/v1/pretest", json!({"findings": [{"label": "lr1", "kappa": 10.0}]}), &["pretest", "--lr", "10"]),
        (
            "/v1/estimate/baxter",
            json!({"t": 30, "n": 200, "sensitivity": 0.9, "specificity": 0.95, "grid": 512}),
            &["estimate", "baxter", "--t", "30", "--n", "200", "--sens", "0.9", "--spec", "0.95", "--grid", "512"],
        ),
    ];
    for (path, body, args) in cases {
        let (status, text) = call("POST", path, &body.to_string()).await;
        assert_eq!(status, StatusCode::OK);
        let out = Command::new(&cli).args(*args).arg("--json").output().unwrap();
        assert!(out.status.success());
        let from_cli: Value = serde_json::from_slice(&out.stdout).unwrap();
        let from_api: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(from_api["result"], from_cli["result"], "{path}");
        assert_eq!(from_api["command"], from_cli["command"]);
    }
}

/// The CLI binary lives next to this test's target directory when the whole
/// workspace is built.
fn cli_path() -> Option<String> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let p = dir.join(format!("bayescreen{}", std::env::consts::EXE_SUFFIX));
    p.exists().then(|| p.to_string_lossy().into_owned())
}

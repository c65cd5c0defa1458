//! HTTP facade over the bayescreen engine.
//!
//! Every `POST /v1/...` route takes the same JSON request the CLI builds from
//! its flags and answers with the same envelope. Handlers keep no state.

use axum::body::Bytes;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use bayescreen::commands::{
    canonical_json, AuditRequest, BaxterRequest, BaxterUnknownRequest, BetaRequest, CategoryRequest, Command,
    CurveRequest, LrRequest, McgeeRequest, NomogramRequest, PosttestRequest, PowerClassRequest, PpvRequest,
    PretestRequest, RoganGladenRequest, SimulateRequest, TablesRequest, ThresholdRequest, SCHEMA_VERSION,
};
use bayescreen::Error;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

/// Upper bound on simulated subjects per request (n times replicates).
pub const MAX_SIMULATED_SUBJECTS: u64 = 50_000_000;

struct Endpoint {
    path: &'static str,
    summary: &'static str,
    required: &'static [&'static str],
}

const ENDPOINTS: &[Endpoint] = &[
    Endpoint { path: "/v1/ppv", summary: "PPV and NPV at a pretest probability", required: &["sensitivity", "specificity", "pretest"] },
    Endpoint { path: "/v1/threshold", summary: "Prevalence threshold of a test", required: &["sensitivity", "specificity"] },
    Endpoint { path: "/v1/lr", summary: "Positive likelihood ratio and power class", required: &["sensitivity", "specificity"] },
    Endpoint { path: "/v1/posttest", summary: "Exact posttest probability; kappa may be a number, a list, or \"infinite\"", required: &["pretest", "kappa"] },
    Endpoint { path: "/v1/curve", summary: "PPV curve over pretest probability", required: &["sensitivity", "specificity"] },
    Endpoint { path: "/v1/nomogram", summary: "Fagan nomogram coordinates and axis ticks", required: &["pretest", "kappa"] },
    Endpoint { path: "/v1/estimate/rogan-gladen", summary: "Rogan-Gladen prevalence with Wald interval", required: &["t", "n", "sensitivity", "specificity"] },
    Endpoint { path: "/v1/estimate/beta", summary: "Conjugate beta posterior for a perfect test", required: &["t", "n"] },
    Endpoint { path: "/v1/estimate/baxter", summary: "Prevalence posterior with known sensitivity and specificity", required: &["t", "n", "sensitivity", "specificity"] },
    Endpoint { path: "/v1/estimate/baxter-unknown", summary: "Prevalence posterior with sensitivity and specificity from validation counts", required: &["t", "n", "t_a", "n_a", "t_b", "n_b"] },
    Endpoint { path: "/v1/pretest", summary: "Pretest range from findings, with optional threshold comparison", required: &["findings"] },
    Endpoint { path: "/v1/mcgee", summary: "McGee approximation or required likelihood ratio", required: &["pretest"] },
    Endpoint { path: "/v1/category", summary: "Medow-Lucey category, optionally after a test result", required: &["probability"] },
    Endpoint { path: "/v1/power-class", summary: "Van den Ende power class of a likelihood ratio", required: &["kappa"] },
    Endpoint { path: "/v1/audit", summary: "Largest McGee error over a pretest and kappa grid", required: &[] },
    Endpoint { path: "/v1/simulate", summary: "Seeded cohort simulation with interval coverage", required: &["n", "prevalence", "sensitivity", "specificity"] },
    Endpoint { path: "/v1/tables", summary: "Heuristic tables of posttest and pretest values", required: &[] },
];

pub fn router() -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/spec", get(spec))
        .route("/v1/ppv", post(run::<PpvRequest>))
        .route("/v1/threshold", post(run::<ThresholdRequest>))
        .route("/v1/lr", post(run::<LrRequest>))
        .route("/v1/posttest", post(run::<PosttestRequest>))
        .route("/v1/curve", post(run::<CurveRequest>))
        .route("/v1/nomogram", post(run::<NomogramRequest>))
        .route("/v1/estimate/rogan-gladen", post(run::<RoganGladenRequest>))
        .route("/v1/estimate/beta", post(run::<BetaRequest>))
        .route("/v1/estimate/baxter", post(run::<BaxterRequest>))
        .route("/v1/estimate/baxter-unknown", post(run::<BaxterUnknownRequest>))
        .route("/v1/pretest", post(run::<PretestRequest>))
        .route("/v1/mcgee", post(run::<McgeeRequest>))
        .route("/v1/category", post(run::<CategoryRequest>))
        .route("/v1/power-class", post(run::<PowerClassRequest>))
        .route("/v1/audit", post(run::<AuditRequest>))
        .route("/v1/simulate", post(simulate))
        .route("/v1/tables", post(run::<TablesRequest>))
}

fn json_response(status: StatusCode, body: &Value) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], canonical_json(body)).into_response()
}

fn error_response(status: StatusCode, name: &str, message: String, field: Option<String>) -> Response {
    json_response(
        status,
        &json!({ "error": name, "message": message, "field": field }),
    )
}

fn engine_error(e: Error) -> Response {
    let status = if e.is_input_error() {
        StatusCode::BAD_REQUEST
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    error_response(status, e.name(), e.to_string(), e.field().map(str::to_owned))
}

fn parse<R: DeserializeOwned>(body: &[u8]) -> Result<R, Response> {
    // An empty body stands for `{}` so parameterless endpoints can be hit bare.
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    let mut de = serde_json::Deserializer::from_slice(body);
    let malformed = |message: String, path: Option<String>| {
        error_response(StatusCode::BAD_REQUEST, "MalformedBody", message, path)
    };
    let req = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        malformed(e.into_inner().to_string(), (path != ".").then_some(path))
    })?;
    de.end().map_err(|e| malformed(e.to_string(), None))?;
    Ok(req)
}

async fn execute<R>(req: R) -> Response
where
    R: Command + Send + 'static,
{
    match tokio::task::spawn_blocking(move || req.run()).await {
        Ok(Ok(report)) => json_response(StatusCode::OK, &serde_json::to_value(&report.envelope).unwrap_or_default()),
        Ok(Err(e)) => engine_error(e),
        Err(_) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "Internal", "computation aborted".into(), None),
    }
}

async fn run<R>(body: Bytes) -> Response
where
    R: Command + DeserializeOwned + Send + 'static,
{
    match parse::<R>(&body) {
        Ok(req) => execute(req).await,
        Err(resp) => resp,
    }
}

async fn simulate(body: Bytes) -> Response {
    let req = match parse::<SimulateRequest>(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    if req.n.saturating_mul(req.replicates) > MAX_SIMULATED_SUBJECTS {
        return error_response(
            StatusCode::BAD_REQUEST,
            "OutOfRange",
            format!("OutOfRange: n * replicates exceeds {MAX_SIMULATED_SUBJECTS} per request"),
            Some("replicates".into()),
        );
    }
    execute(req).await
}

async fn health() -> Response {
    json_response(
        StatusCode::OK,
        &json!({ "status": "ok", "version": bayescreen::VERSION, "schema_version": SCHEMA_VERSION }),
    )
}

/// OpenAPI-style description of the routes.
pub fn spec_document() -> Value {
    let error_schema = json!({
        "type": "object",
        "properties": {
            "error": { "type": "string" },
            "message": { "type": "string" },
            "field": { "type": ["string", "null"] }
        }
    });
    let mut paths = serde_json::Map::new();
    for ep in ENDPOINTS {
        paths.insert(
            ep.path.into(),
            json!({ "post": {
                "summary": ep.summary,
                "requestBody": { "content": { "application/json": { "schema": {
                    "type": "object", "required": ep.required
                }}}},
                "responses": {
                    "200": { "description": "output envelope", "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Envelope" }}}},
                    "400": { "description": "malformed body or value out of range", "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" }}}},
                    "422": { "description": "well-formed input on which the computation is undefined", "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" }}}}
                }
            }}),
        );
    }
    paths.insert(
        "/v1/health".into(),
        json!({ "get": { "summary": "Service and engine version", "responses": { "200": { "description": "ok" }}}}),
    );
    paths.insert(
        "/v1/spec".into(),
        json!({ "get": { "summary": "This document", "responses": { "200": { "description": "ok" }}}}),
    );
    json!({
        "openapi": "3.1.0",
        "info": { "title": "bayescreen", "version": bayescreen::VERSION },
        "paths": paths,
        "components": { "schemas": {
            "Envelope": {
                "type": "object",
                "required": ["schema_version", "command", "version", "inputs", "result", "warnings"],
                "properties": {
                    "schema_version": { "type": "string", "const": SCHEMA_VERSION },
                    "command": { "type": "string" },
                    "version": { "type": "string" },
                    "inputs": { "type": "object" },
                    "result": {},
                    "warnings": { "type": "array", "items": { "type": "string" } }
                }
            },
            "Error": error_schema
        }}
    })
}

async fn spec() -> Response {
    json_response(StatusCode::OK, &spec_document())
}

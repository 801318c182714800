#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use boycott_registry::{router, Registry, RegistryConfig, Reviewer, SeedOffsets, Store};
use chrono::{TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const TOKEN: &str = "reviewer-token";

pub fn reference(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../campaigns").join(format!("{name}.campaign.json"));
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

pub fn config() -> RegistryConfig {
    let mut c = RegistryConfig::default();
    c.reviewers.push(Reviewer { name: "gatekeeper".into(), token: TOKEN.into() });
    c.seeds.insert("grabyourwallet".into(), SeedOffsets { participants: 12, ..SeedOffsets::default() });
    c
}

pub fn registry() -> Arc<Registry> {
    let clock = Arc::new(|| Utc.with_ymd_and_hms(2018, 3, 1, 12, 0, 0).unwrap());
    Arc::new(Registry::with_clock(Store::memory(), config(), clock))
}

pub fn app() -> Router {
    router(registry())
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or(Value::Null)
    }
}

pub async fn call(app: &Router, method: Method, uri: &str, headers: &[(&str, &str)], body: Option<String>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply { status, headers, text: String::from_utf8(bytes.to_vec()).unwrap() }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, &[], None).await
}

pub async fn post(app: &Router, uri: &str, body: &Value) -> Reply {
    call(app, Method::POST, uri, &[], Some(body.to_string())).await
}

pub fn review_body(id: &str, decision: &str, flags: [bool; 3], note: &str) -> Value {
    serde_json::json!({
        "campaign_id": id,
        "decision": decision,
        "checklist": {
            "splc_hate_group": flags[0],
            "protected_class_targeting": flags[1],
            "state_actor": flags[2]
        },
        "reviewer_note": note
    })
}

pub async fn review(app: &Router, id: &str, body: &Value) -> Reply {
    let auth = format!("Bearer {TOKEN}");
    call(app, Method::POST, &format!("/v1/campaigns/{id}/review"), &[("authorization", &auth)], Some(body.to_string())).await
}

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use rosetta_kb::fixtures;
use rosetta_kb::KnowledgeBase;
use rosetta_service::{http, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

pub struct Api {
    pub app: Router,
}

impl Api {
    pub fn memory() -> Self {
        Self::with(KnowledgeBase::in_memory())
    }

    pub fn open(dir: &Path) -> Self {
        Self::with(rosetta_service::open(&ServiceConfig::at(dir)).unwrap())
    }

    pub fn with(kb: KnowledgeBase) -> Self {
        Self { app: http::router(Arc::new(RwLock::new(kb))) }
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (u16, Value) {
        let builder = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => builder.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => builder.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status().as_u16();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or_else(|_| json!(String::from_utf8_lossy(&bytes))) };
        (status, value)
    }

    pub async fn get(&self, uri: &str) -> (u16, Value) {
        self.call(Method::GET, uri, None).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> (u16, Value) {
        self.call(Method::POST, uri, Some(body)).await
    }

    /// Asserts success and returns the body.
    pub async fn ok(&self, method: Method, uri: &str, body: Option<Value>) -> Value {
        let (status, v) = self.call(method.clone(), uri, body).await;
        assert!((200..300).contains(&status), "{method} {uri} -> {status}: {v}");
        v
    }
}

fn yaml(text: &str) -> Value {
    serde_yaml::from_str(text).unwrap()
}

/// Loads the bundled data set through the API and returns the identifiers
/// by name.
pub async fn load_demo(api: &Api) -> BTreeMap<&'static str, String> {
    let mut ids = BTreeMap::new();
    api.ok(Method::POST, "/terms/import", Some(serde_json::from_str(fixtures::TERMS_JSON).unwrap())).await;
    for (name, text) in [
        ("weight", fixtures::WEIGHT_WIZARD),
        ("travel", fixtures::TRAVEL_WIZARD),
        ("has_part", fixtures::HAS_PART_WIZARD),
        ("ci_weight", fixtures::CI_WEIGHT_WIZARD),
    ] {
        let v = api.ok(Method::POST, "/schemas/wizard", Some(yaml(text))).await;
        ids.insert(name, v["schema"]["statement_class"].as_str().unwrap().to_owned());
    }
    for (name, text) in [
        ("obi", fixtures::OBI_CROSSWALK),
        ("oboe", fixtures::OBOE_CROSSWALK),
        ("qudt", fixtures::QUDT_CROSSWALK),
        ("csv", fixtures::CSV_CROSSWALK),
        ("tree", fixtures::TREE_CROSSWALK),
    ] {
        let v = api.ok(Method::POST, &format!("/crosswalks?schema={}", ids["weight"]), Some(yaml(text))).await;
        ids.insert(name, v["upri"].as_str().unwrap().to_owned());
    }
    let segments: BTreeMap<&str, &str> = fixtures::TRAVEL_SEGMENTS.into_iter().collect();
    let label = json!({
        "type": "dynamic-label",
        "schema": ids["travel"],
        "name": "travel with optional details",
        "template": fixtures::TRAVEL_LABEL,
        "optional_segments": segments,
        "default": false,
    });
    let v = api.ok(Method::POST, "/templates", Some(label)).await;
    ids.insert("travel_label", v["upri"].as_str().unwrap().to_owned());
    ids
}

pub fn resource(upri: &str) -> Value {
    json!({"resource": {"upri": upri, "kind": "named-individual"}})
}

pub fn literal(lexical: &str, datatype: &str) -> Value {
    json!({"literal": {"lexical": lexical, "datatype": datatype}})
}

pub fn weight_request(schema: &str, subject: &str, value: &str, unit: &str, paradigm: &str) -> Value {
    json!({
        "schema": schema,
        "subject": {"upri": subject, "kind": "named-individual"},
        "bindings": {"VALUE": literal(value, "decimal"), "UNIT": resource(unit)},
        "paradigm": paradigm,
    })
}

/// Recursively sorts object keys, for byte comparison of JSON documents.
pub fn sorted(v: &Value) -> String {
    fn walk(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let sorted: BTreeMap<&String, Value> = m.iter().map(|(k, v)| (k, walk(v))).collect();
                Value::Object(sorted.into_iter().map(|(k, v)| (k.clone(), v)).collect())
            }
            Value::Array(a) => Value::Array(a.iter().map(walk).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&walk(v)).unwrap()
}

mod common;

use std::collections::BTreeSet;

use axum::http::StatusCode;
use common::*;
use serde_json::{json, Value};
use triz_server::{ERROR_CODES, ROUTES};

#[test]
fn routes_and_document_list_the_same_operations() {
    let doc = openapi();
    assert_eq!(doc["openapi"], "3.1.0");
    let documented: BTreeSet<(String, String)> = doc["paths"]
        .as_object()
        .unwrap()
        .iter()
        .flat_map(|(path, ops)| ops.as_object().unwrap().keys().map(move |m| (m.clone(), path.clone())))
        .collect();
    let routed: BTreeSet<(String, String)> = ROUTES.iter().map(|(m, p)| (m.to_string(), p.to_string())).collect();
    assert_eq!(documented, routed);
}

#[test]
fn error_codes_match_the_error_schema() {
    let doc = openapi();
    let documented: BTreeSet<&str> = doc["components"]["schemas"]["Error"]["properties"]["code"]["enum"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let known: BTreeSet<&str> = ERROR_CODES.iter().map(|(c, _)| *c).collect();
    assert_eq!(documented, known);
    // every documented non-success status is one some code maps to
    let statuses: BTreeSet<String> = ERROR_CODES.iter().map(|(_, s)| s.to_string()).collect();
    for (path, ops) in doc["paths"].as_object().unwrap() {
        for (method, op) in ops.as_object().unwrap() {
            for status in op["responses"].as_object().unwrap().keys() {
                assert!(status.starts_with('2') || statuses.contains(status), "{method} {path} documents {status}");
            }
        }
    }
}

#[test]
fn every_schema_reference_resolves() {
    fn walk(v: &Value, refs: &mut Vec<String>) {
        match v {
            Value::Object(m) => {
                if let Some(Value::String(r)) = m.get("$ref") {
                    refs.push(r.clone());
                }
                m.values().for_each(|x| walk(x, refs));
            }
            Value::Array(a) => a.iter().for_each(|x| walk(x, refs)),
            _ => {}
        }
    }
    let doc = openapi();
    let mut refs = Vec::new();
    walk(doc, &mut refs);
    assert!(!refs.is_empty());
    for r in refs {
        let pointer = r.strip_prefix('#').unwrap();
        assert!(doc.pointer(pointer).is_some(), "dangling {r}");
    }
    for (name, schema) in doc["components"]["schemas"].as_object().unwrap() {
        let mut s = schema.clone();
        s.as_object_mut().unwrap().insert("components".into(), doc["components"].clone());
        jsonschema::validator_for(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

fn concrete(template: &str) -> String {
    template.replace("{id}", "missing").replace("{index}", "0")
}

#[tokio::test]
async fn every_route_answers_with_a_documented_status() {
    let app = TestApp::new(replay_gateway());
    for (method, template) in ROUTES {
        let uri = concrete(template);
        let (status, body) = match method {
            "get" if template == "/openapi.json" => {
                let (status, v) = app.get(&uri, template).await;
                assert_eq!(&v, openapi());
                (status, v)
            }
            "get" => app.get(&uri, template).await,
            _ => app.post(&uri, template, json!({})).await,
        };
        // an empty body or unknown id is never mistaken for a missing route
        assert!(!(status == StatusCode::NOT_FOUND && body["message"].as_str().unwrap_or("").ends_with("route")), "{method} {template} fell through");
    }
}

#[tokio::test]
async fn unknown_routes_and_methods_are_json_errors() {
    let app = TestApp::new(replay_gateway());
    let (status, _, bytes) = app.raw(axum::http::Request::get("/nope").body(axum::body::Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["code"], "not_found");
    let (status, _, _) = app.raw(axum::http::Request::delete("/sessions").body(axum::body::Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
}

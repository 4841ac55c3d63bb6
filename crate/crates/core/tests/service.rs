mod common;

use std::process::Command;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::data;
use synlex::morph::load_morph;
use synlex::service::{http::router, Service};
use synlex::{OpenMode, Store};

struct Client {
    service: Arc<Service>,
}

impl Client {
    fn over_mini(dir: &tempfile::TempDir) -> Client {
        let path = dir.path().join("mini.db");
        let status = Command::new(env!("CARGO_BIN_EXE_synlex"))
            .arg("build")
            .arg(data("mini.flat"))
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        let store = Store::open(&path, OpenMode::ReadWrite, None).unwrap();
        let morph = load_morph(data("mini.morph")).unwrap();
        let service = Service::new(store, morph).with_export_dir(dir.path());
        Client { service: Arc::new(service) }
    }

    async fn call(&self, method: &str, path: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(path)
            .header("content-type", "application/json")
            .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
            .unwrap();
        let resp = router(self.service.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap())
    }

    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        self.call("POST", path, Some(body)).await
    }

    fn close(self) {
        let service = Arc::try_unwrap(self.service).ok().expect("no other handles");
        service.into_store().close().unwrap();
    }
}

fn synlex(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_synlex")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[tokio::test]
async fn search_browse_modify_delete_save() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::over_mini(&dir);

    let (st, found) = client.post("/api/search", json!({ "query": "INDEX=need", "mode": "verbose" })).await;
    assert_eq!(st, StatusCode::OK);
    let results = found["results"].as_array().unwrap().clone();
    assert_eq!(results.len(), 4);
    assert!(results[0]["display"].as_str().unwrap().starts_with("INDEX: need"));
    let taken = found["taken_at"].as_u64().unwrap();

    // Next, Next, Previous: the client keeps a cursor over the result set.
    let mut cursor = 0usize;
    cursor = (cursor + 1).min(results.len() - 1);
    cursor = (cursor + 1).min(results.len() - 1);
    cursor = cursor.saturating_sub(1);
    let old = results[cursor]["entry"].clone();
    assert_eq!(old["frame"], json!(["Sentential_Complement"]));

    let mut new = old.clone();
    new["fs"] = json!(["Infinitive_Complement", "Non-Ergative"]);
    let (st, _) = client.post("/api/entry/update", json!({ "old": old, "new": new })).await;
    assert_eq!(st, StatusCode::OK);

    let victim = results[3]["entry"].clone();
    assert_eq!(victim["pos"], json!("Noun"));
    let (st, _) = client.post("/api/entry/delete", json!({ "entry": victim })).await;
    assert_eq!(st, StatusCode::OK);

    // The original result set is stale now; saving it must be refused.
    let (st, err) = client
        .post("/api/export", json!({ "query": "INDEX=need", "taken_at": taken, "path": "stale.flat" }))
        .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(err["error"]["kind"], "stale");

    let (_, fresh) = client.post("/api/search", json!({ "query": "INDEX=need" })).await;
    let (st, saved) = client
        .post(
            "/api/export",
            json!({ "query": "INDEX=need", "taken_at": fresh["taken_at"], "path": "need.flat" }),
        )
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(saved["count"], 3);
    client.close();

    let store = dir.path().join("mini.db");
    let store = store.to_str().unwrap();
    // an update re-appends, so the modified entry now comes last
    let shown = synlex(&["query", store, "INDEX=need", "--flat"]);
    let exported = std::fs::read_to_string(dir.path().join("need.flat")).unwrap();
    assert_eq!(shown, exported);
    assert_eq!(
        exported,
        "INDEX: need\tENTRY: need\tPOS: Verb\tFRAME: Transitive_Verb\tFS: Non-Ergative\n\
         INDEX: need\tENTRY: need\tPOS: Verb\tFRAME: Auxiliary_Verb\tFS: Base/Goes_on_Base\n\
         INDEX: need\tENTRY: need\tPOS: Verb\tFRAME: Sentential_Complement\tFS: Infinitive_Complement/Non-Ergative\n"
    );
    assert!(synlex(&["query", store, "INDEX=need POS=Noun", "--flat"]).is_empty());
    assert!(synlex(&["verify", store]).starts_with("ok: 232 live entries"));
}

#[tokio::test]
async fn create_then_delete_restores_census() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::over_mini(&dir);
    let (_, before) = client.call("GET", "/api/census", None).await;
    let entry = json!({
        "index": "zorb", "entry": ["zorb"], "pos": "N",
        "frame": ["Base_Noun"], "fs": ["wh-"], "ex": ["the zorb | glowed"]
    });
    let (st, created) = client.post("/api/entry/create", json!({ "entry": entry })).await;
    assert_eq!(st, StatusCode::OK, "{created}");
    let (_, found) = client.post("/api/search", json!({ "query": "INDEX=zorb", "mode": "xtag" })).await;
    assert_eq!(found["count"], 1);
    // Payload symbols are verbose whatever the display mode.
    assert_eq!(found["results"][0]["entry"]["pos"], "Noun");
    assert!(found["results"][0]["display"].as_str().unwrap().contains("POS: N"));
    let (st, dup) = client.post("/api/entry/create", json!({ "entry": entry })).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(dup["error"]["kind"], "duplicate");
    let (st, _) = client.post("/api/entry/delete", json!({ "entry": entry })).await;
    assert_eq!(st, StatusCode::OK);
    let (_, after) = client.call("GET", "/api/census", None).await;
    assert_eq!(before, after);
    client.close();
}

#[tokio::test]
async fn wh_nouns_and_coverage_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::over_mini(&dir);
    let (_, found) = client.post("/api/search", json!({ "query": "POS=Noun FS=wh+" })).await;
    let mut words: Vec<&str> = found["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["entry"]["index"].as_str().unwrap())
        .collect();
    words.sort();
    assert_eq!(words, ["what", "when", "which", "who", "whom"]);

    let corpus = std::fs::read_to_string(data("mini-corpus.tsv")).unwrap();
    let (st, report) = client.post("/api/coverage", json!({ "name": "mini", "corpus": corpus })).await;
    assert_eq!(st, StatusCode::OK, "{report}");
    assert_eq!(report["hits"], 371);
    assert_eq!(report["total"], 432);
    assert_eq!(report["percent_hit"], "85.88");

    let (st, reg) = client.call("GET", "/api/registry", None).await;
    assert_eq!(st, StatusCode::OK);
    let parts = reg["pos"].as_array().unwrap();
    assert_eq!(parts.len(), 9);
    assert!(parts.iter().any(|p| p["name"] == "Verb_Particle" && p["xtag"] == "PL" && p["head"] == false));
    client.close();
}

#[tokio::test]
async fn errors_are_json() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::over_mini(&dir);
    let (st, v) = client.call("GET", "/api/nowhere", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["kind"], "no_route");
    let (st, v) = client.call("DELETE", "/api/search", None).await;
    assert_eq!(st, StatusCode::METHOD_NOT_ALLOWED);
    assert!(v["error"]["message"].is_string());
    let (st, v) = client.post("/api/search", json!({ "query": "EX=hello" })).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["kind"], "query");
    let (st, _) = client.post("/api/export", json!({ "query": "INDEX=need", "path": "/etc/x" })).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    client.close();
}

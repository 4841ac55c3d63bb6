//! Local JSON API over one open store.
//!
//! [`Service::dispatch`] maps `(method, path, body)` to `(status, json)`
//! without any transport; [`http`] wraps it in an axum server. Wire
//! formats are listed in `docs/api.md`.

pub mod http;

use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coverage::{coverage_report, read_corpus, CoverageError, TagMap};
use crate::lexmodel::{check_entry, LexEntry, PosPart, Registry, RenderMode};
use crate::lexstore::{Store, StoreError};
use crate::morph::MorphTable;
use crate::query::{bulk_delete, eval_query, export_text, render_entry, Query, QueryError};

/// Tag map used by `/api/coverage` when the request has none.
pub const DEFAULT_TAGMAP: &str = include_str!("../../data/ptb.tagmap");

/// An error response: HTTP status plus `{"error": {"kind", "message"}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: u16, kind: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            kind,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(400, "bad_request", message)
    }

    pub fn body(&self) -> Value {
        json!({ "error": { "kind": self.kind, "message": self.message } })
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        let message = e.to_string();
        match e {
            StoreError::Invalid(_) => ApiError::new(400, "invalid_entry", message),
            StoreError::Duplicate(_) => ApiError::new(409, "duplicate", message),
            StoreError::NotFound(_) | StoreError::UnknownRecord(_) => {
                ApiError::new(404, "not_found", message)
            }
            StoreError::ReadOnly => ApiError::new(409, "read_only", message),
            _ => ApiError::new(500, "store", message),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> ApiError {
        let message = e.to_string();
        match e {
            QueryError::Store(s) => s.into(),
            QueryError::Stale { .. } => ApiError::new(409, "stale", message),
            QueryError::Io { .. } | QueryError::FlatFile(_) => ApiError::new(500, "export", message),
            _ => ApiError::new(400, "query", message),
        }
    }
}

impl From<CoverageError> for ApiError {
    fn from(e: CoverageError) -> ApiError {
        let message = e.to_string();
        match e {
            CoverageError::Store(s) => s.into(),
            CoverageError::Io { .. } => ApiError::new(500, "coverage", message),
            _ => ApiError::new(400, "coverage", message),
        }
    }
}

#[derive(Deserialize)]
struct SearchReq {
    query: String,
    #[serde(default)]
    mode: RenderMode,
}

#[derive(Deserialize)]
struct EntryReq {
    entry: LexEntry,
}

#[derive(Deserialize)]
struct UpdateReq {
    old: LexEntry,
    new: LexEntry,
}

#[derive(Deserialize)]
struct QueryActionReq {
    query: String,
    /// Mutation counter the client's result set was taken at.
    #[serde(default)]
    taken_at: Option<u64>,
    #[serde(default)]
    path: Option<String>,
    #[serde(default)]
    mode: RenderMode,
}

#[derive(Deserialize)]
struct CoverageReq {
    name: String,
    corpus: String,
    #[serde(default)]
    tagmap: Option<String>,
}

#[derive(Serialize)]
struct PosRow {
    pos: String,
    entries: u64,
    distinct_indexes: u64,
}

pub struct Service {
    store: RwLock<Store>,
    registry: Arc<Registry>,
    morph: MorphTable,
    export_dir: Option<PathBuf>,
}

impl Service {
    pub fn new(store: Store, morph: MorphTable) -> Service {
        Service {
            registry: store.registry().clone(),
            store: RwLock::new(store),
            morph,
            export_dir: None,
        }
    }

    /// Allow `/api/export` to write files, confined to this directory.
    pub fn with_export_dir(mut self, dir: impl Into<PathBuf>) -> Service {
        self.export_dir = Some(dir.into());
        self
    }

    pub fn into_store(self) -> Store {
        self.store.into_inner().unwrap_or_else(|p| p.into_inner())
    }

    pub fn dispatch(&self, method: &str, path: &str, body: &[u8]) -> (u16, Value) {
        match self.route(method, path, body) {
            Ok(v) => (200, v),
            Err(e) => (e.status, e.body()),
        }
    }

    fn route(&self, method: &str, path: &str, body: &[u8]) -> Result<Value, ApiError> {
        let path = path.split('?').next().unwrap_or(path).trim_end_matches('/');
        match (method, path) {
            ("GET", "/api/health") => self.health(),
            ("GET", "/api/registry") => Ok(self.registry_json()),
            ("GET", "/api/census") => self.census(),
            ("POST", "/api/search") => self.search(parse(body)?),
            ("POST", "/api/entry/create") => self.create(parse(body)?),
            ("POST", "/api/entry/update") => self.update(parse(body)?),
            ("POST", "/api/entry/delete") => self.delete(parse(body)?),
            ("POST", "/api/bulk-delete") => self.bulk_delete(parse(body)?),
            ("POST", "/api/export") => self.export(parse(body)?),
            ("POST", "/api/coverage") => self.coverage(parse(body)?),
            (
                _,
                "/api/health" | "/api/registry" | "/api/census" | "/api/search" | "/api/entry/create"
                | "/api/entry/update" | "/api/entry/delete" | "/api/bulk-delete" | "/api/export"
                | "/api/coverage",
            ) => Err(ApiError::new(405, "method_not_allowed", format!("{method} {path}"))),
            _ => Err(ApiError::new(404, "no_route", format!("no endpoint {method} {path}"))),
        }
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(|p| p.into_inner())
    }

    fn health(&self) -> Result<Value, ApiError> {
        let store = self.read();
        Ok(json!({ "ok": true, "entries": store.len(), "mutation": store.mutation_counter() }))
    }

    fn registry_json(&self) -> Value {
        let reg = &self.registry;
        // every label part, including the one that never heads an entry
        let pos: Vec<Value> = (0..=u8::MAX)
            .filter_map(PosPart::from_code)
            .map(|p| {
                json!({
                    "name": p.render(RenderMode::Verbose),
                    "xtag": p.render(RenderMode::Xtag),
                    "code": p.code(),
                    "head": matches!(p, PosPart::Tag(_)),
                })
            })
            .collect();
        let frames: Vec<Value> = reg
            .frames()
            .iter()
            .map(|f| json!({ "pos": f.pos.name(), "name": f.verbose_name, "xtag": f.xtag_name, "code": f.code }))
            .collect();
        let features: Vec<Value> = reg
            .features()
            .iter()
            .map(|v| {
                json!({
                    "name": v.name,
                    "xtag": v.xtag_name,
                    "group": v.group.name(),
                    "exclusive": v.group.is_exclusive(),
                    "code": v.code,
                })
            })
            .collect();
        json!({
            "version": reg.version(),
            "hash": format!("{:016x}", reg.hash()),
            "pos": pos,
            "frames": frames,
            "features": features,
        })
    }

    fn census(&self) -> Result<Value, ApiError> {
        let census = self.read().census()?;
        let rows: Vec<PosRow> = census
            .per_pos
            .iter()
            .map(|(pos, c)| PosRow {
                pos: pos.to_string(),
                entries: c.entries,
                distinct_indexes: c.distinct_indexes,
            })
            .collect();
        Ok(json!({ "total": census.total, "per_pos": rows }))
    }

    fn search(&self, req: SearchReq) -> Result<Value, ApiError> {
        let q = Query::parse(&req.query)?;
        let store = self.read();
        let rs = eval_query(&store, &q)?;
        // payload symbols stay verbose; the mode only affects `display`
        let results: Vec<Value> = rs
            .entries()
            .map(|e| json!({ "entry": e, "display": render_entry(e, req.mode, &self.registry) }))
            .collect();
        Ok(json!({
            "query": q.to_string(),
            "mode": req.mode,
            "taken_at": rs.taken_at(),
            "count": rs.len(),
            "results": results,
        }))
    }

    fn checked(&self, e: LexEntry) -> Result<LexEntry, ApiError> {
        let e = e.normalized(&self.registry);
        check_entry(&e, &self.registry).map_err(|m| ApiError::new(400, "invalid_entry", m.to_string()))?;
        Ok(e)
    }

    fn create(&self, req: EntryReq) -> Result<Value, ApiError> {
        let e = self.checked(req.entry)?;
        let mut store = self.write();
        let id = store.put(&e)?;
        store.flush()?;
        Ok(json!({ "id": id.0, "mutation": store.mutation_counter() }))
    }

    fn update(&self, req: UpdateReq) -> Result<Value, ApiError> {
        let old = req.old.normalized(&self.registry);
        let new = self.checked(req.new)?;
        let mut store = self.write();
        let id = store.update(&old, &new)?;
        store.flush()?;
        Ok(json!({ "id": id.0, "mutation": store.mutation_counter() }))
    }

    fn delete(&self, req: EntryReq) -> Result<Value, ApiError> {
        let e = req.entry.normalized(&self.registry);
        let mut store = self.write();
        store.delete(&e)?;
        store.flush()?;
        Ok(json!({ "mutation": store.mutation_counter() }))
    }

    fn stale_check(store: &Store, taken_at: Option<u64>) -> Result<(), ApiError> {
        match taken_at {
            Some(t) if t != store.mutation_counter() => Err(QueryError::Stale {
                taken: t,
                current: store.mutation_counter(),
            }
            .into()),
            _ => Ok(()),
        }
    }

    fn bulk_delete(&self, req: QueryActionReq) -> Result<Value, ApiError> {
        let q = Query::parse(&req.query)?;
        let mut store = self.write();
        Self::stale_check(&store, req.taken_at)?;
        let rs = eval_query(&store, &q)?;
        let deleted = bulk_delete(&mut store, &rs)?;
        store.flush()?;
        Ok(json!({ "deleted": deleted, "mutation": store.mutation_counter() }))
    }

    fn export(&self, req: QueryActionReq) -> Result<Value, ApiError> {
        let q = Query::parse(&req.query)?;
        let store = self.read();
        Self::stale_check(&store, req.taken_at)?;
        let rs = eval_query(&store, &q)?;
        let text = export_text(&store, &rs, req.mode)?;
        match req.path {
            None => Ok(json!({ "count": rs.len(), "text": text })),
            Some(rel) => {
                let dest = self.export_path(&rel)?;
                std::fs::write(&dest, text)
                    .map_err(|e| ApiError::new(500, "export", format!("{}: {e}", dest.display())))?;
                Ok(json!({ "count": rs.len(), "path": dest.display().to_string() }))
            }
        }
    }

    fn export_path(&self, rel: &str) -> Result<PathBuf, ApiError> {
        let dir = self
            .export_dir
            .as_ref()
            .ok_or_else(|| ApiError::new(403, "export_disabled", "server has no export directory"))?;
        let p = Path::new(rel);
        let plain = p.components().all(|c| matches!(c, Component::Normal(_)));
        if rel.is_empty() || !plain {
            return Err(ApiError::bad_request(format!(
                "export path must be relative to the export directory: {rel:?}"
            )));
        }
        Ok(dir.join(p))
    }

    fn coverage(&self, req: CoverageReq) -> Result<Value, ApiError> {
        let tags = TagMap::parse(req.tagmap.as_deref().unwrap_or(DEFAULT_TAGMAP))?;
        let corpus = read_corpus(&req.corpus)?;
        let store = self.read();
        let report = coverage_report(&req.name, corpus, &store, &self.morph, &tags)?;
        let breakdown: serde_json::Map<String, Value> = report
            .breakdown
            .iter()
            .map(|(c, p)| (c.key().to_string(), Value::String(p.to_string())))
            .collect();
        let miss_counts: serde_json::Map<String, Value> = crate::coverage::MissCategory::ALL
            .iter()
            .map(|c| (c.key().to_string(), json!(report.counts.misses_in(*c))))
            .collect();
        Ok(json!({
            "corpus": report.corpus,
            "hits": report.hits,
            "total": report.total,
            "percent_hit": report.percent.to_string(),
            "non_hits": report.non_hits,
            "miss_counts": miss_counts,
            "breakdown": breakdown,
            "table": report.to_table(),
        }))
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

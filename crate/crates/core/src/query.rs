//! Conjunctive field search, result-set actions and entry rendering.
//!
//! Query text is a whitespace-separated list of `FIELD=value` conjuncts:
//!
//! ```text
//! query     := conjunct (WS conjunct)*
//! conjunct  := field "=" value
//! field     := INDEX | ENTRY | POS | FRAME | FS        (case-insensitive)
//! value     := any non-whitespace text; compound POS labels join parts with "+"
//! ```
//!
//! FRAME and FS may repeat (every value must be present); the other fields
//! may appear once. EX is not searchable. Matching is exact and
//! case-sensitive; POS, FRAME and FS values may be given as verbose names
//! or xtag codes.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::flatfile::{serialize_lexicon_as, FlatFileError};
use crate::lexmodel::{Field, LexEntry, PosLabel, Registry, RenderMode};
use crate::lexstore::{RawRecord, RecordId, Store, StoreError};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("query syntax: {0}")]
    Syntax(String),
    #[error("the EX field is not searchable")]
    ExNotSearchable,
    #[error("field {0} may appear only once in a query")]
    RepeatedField(Field),
    #[error("a query needs at least one conjunct")]
    Empty,
    #[error("unknown {field} value '{value}'")]
    UnknownSymbol { field: Field, value: String },
    #[error("result set is stale (taken at mutation {taken}, store is at {current})")]
    Stale { taken: u64, current: u64 },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    FlatFile(#[from] FlatFileError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Only equality exists today; further relations (e.g. patterns) would be
/// added here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[non_exhaustive]
pub enum Relation {
    Equals,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldPredicate {
    pub field: Field,
    pub relation: Relation,
    pub value: String,
}

impl FieldPredicate {
    pub fn eq(field: Field, value: impl Into<String>) -> FieldPredicate {
        FieldPredicate {
            field,
            relation: Relation::Equals,
            value: value.into(),
        }
    }
}

impl fmt::Display for FieldPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.relation {
            Relation::Equals => write!(f, "{}={}", self.field, self.value),
        }
    }
}

/// A non-empty conjunction of field predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    predicates: Vec<FieldPredicate>,
}

impl Query {
    pub fn new(predicates: Vec<FieldPredicate>) -> Result<Query, QueryError> {
        if predicates.is_empty() {
            return Err(QueryError::Empty);
        }
        for (i, p) in predicates.iter().enumerate() {
            if p.field == Field::Ex {
                return Err(QueryError::ExNotSearchable);
            }
            if p.value.is_empty() || p.value.chars().any(char::is_whitespace) {
                return Err(QueryError::Syntax(format!("bad value {:?} for {}", p.value, p.field)));
            }
            let repeatable = matches!(p.field, Field::Frame | Field::Fs);
            if !repeatable && predicates[..i].iter().any(|q| q.field == p.field) {
                return Err(QueryError::RepeatedField(p.field));
            }
        }
        Ok(Query { predicates })
    }

    pub fn parse(text: &str) -> Result<Query, QueryError> {
        let preds = text
            .split_whitespace()
            .map(|conj| {
                let (field, value) = conj
                    .split_once('=')
                    .ok_or_else(|| QueryError::Syntax(format!("expected FIELD=value, found {conj:?}")))?;
                let field = Field::from_label(field)
                    .ok_or_else(|| QueryError::Syntax(format!("unknown field {field:?}")))?;
                Ok(FieldPredicate::eq(field, value))
            })
            .collect::<Result<Vec<_>, QueryError>>()?;
        Query::new(preds)
    }

    /// Add one more conjunct.
    pub fn and(&self, p: FieldPredicate) -> Result<Query, QueryError> {
        let mut preds = self.predicates.clone();
        preds.push(p);
        Query::new(preds)
    }

    pub fn predicates(&self) -> &[FieldPredicate] {
        &self.predicates
    }

    /// The INDEX value, when the query pins one.
    pub fn index_key(&self) -> Option<&str> {
        self.predicates
            .iter()
            .find(|p| p.field == Field::Index)
            .map(|p| p.value.as_str())
    }

    /// Test one entry against the query.
    pub fn matches(&self, e: &LexEntry, reg: &Registry) -> Result<bool, QueryError> {
        Ok(Compiled::new(self, reg)?.matches_entry(e))
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.predicates.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Query {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Query::parse(s)
    }
}

/// Query with symbols resolved to registry codes and canonical names.
struct Compiled {
    index: Option<String>,
    entry: Option<String>,
    pos: Option<(PosLabel, Vec<u8>)>,
    frames: Vec<(String, u16)>,
    fs: Vec<(String, u16)>,
}

impl Compiled {
    fn new(q: &Query, reg: &Registry) -> Result<Compiled, QueryError> {
        let unknown = |p: &FieldPredicate| QueryError::UnknownSymbol {
            field: p.field,
            value: p.value.clone(),
        };
        let mut c = Compiled {
            index: None,
            entry: None,
            pos: None,
            frames: Vec::new(),
            fs: Vec::new(),
        };
        for p in &q.predicates {
            match p.field {
                Field::Index => c.index = Some(p.value.clone()),
                Field::Entry => c.entry = Some(p.value.clone()),
                Field::Pos => {
                    let label = PosLabel::parse(&p.value).map_err(|_| unknown(p))?;
                    let codes = label.parts().map(|part| part.code()).collect();
                    c.pos = Some((label, codes));
                }
                Field::Frame => {
                    let f = reg.resolve_frame(&p.value).ok_or_else(|| unknown(p))?;
                    c.frames.push((f.verbose_name.clone(), f.code));
                }
                Field::Fs => {
                    let f = reg.resolve_feature(&p.value).ok_or_else(|| unknown(p))?;
                    c.fs.push((f.name.clone(), f.code));
                }
                Field::Ex => return Err(QueryError::ExNotSearchable),
            }
        }
        Ok(c)
    }

    fn matches_raw(&self, raw: &RawRecord<'_>) -> bool {
        if let Some(index) = &self.index {
            if raw.index != index.as_bytes() {
                return false;
            }
        }
        if let Some((_, codes)) = &self.pos {
            if raw.pos != codes.as_slice() {
                return false;
            }
        }
        if !self
            .frames
            .iter()
            .all(|(_, code)| raw.frame_codes().any(|c| c == *code))
        {
            return false;
        }
        if !self
            .fs
            .iter()
            .all(|(_, code)| raw.fs_codes().any(|c| c == *code))
        {
            return false;
        }
        if let Some(tok) = &self.entry {
            if !raw.tokens().any(|t| t == tok.as_bytes()) {
                return false;
            }
        }
        true
    }

    fn matches_entry(&self, e: &LexEntry) -> bool {
        self.index.as_ref().is_none_or(|i| &e.index == i)
            && self.entry.as_ref().is_none_or(|t| e.entry.contains(t))
            && self.pos.as_ref().is_none_or(|(label, _)| &e.pos == label)
            && self.frames.iter().all(|(name, _)| e.frames.contains(name))
            && self.fs.iter().all(|(name, _)| e.fs.contains(name))
    }
}

/// Entries matching a query, in store order, with a browsing cursor.
#[derive(Debug, Clone)]
pub struct ResultSet {
    query: Query,
    hits: Vec<(RecordId, LexEntry)>,
    taken_at: u64,
    cursor: usize,
}

impl ResultSet {
    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &LexEntry> + '_ {
        self.hits.iter().map(|(_, e)| e)
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = RecordId> + '_ {
        self.hits.iter().map(|(id, _)| *id)
    }

    pub fn to_entries(&self) -> Vec<LexEntry> {
        self.entries().cloned().collect()
    }

    /// Mutation counter of the store when the set was produced.
    pub fn taken_at(&self) -> u64 {
        self.taken_at
    }

    pub fn is_stale(&self, store: &Store) -> bool {
        store.mutation_counter() != self.taken_at
    }

    pub fn ensure_fresh(&self, store: &Store) -> Result<(), QueryError> {
        if self.is_stale(store) {
            Err(QueryError::Stale {
                taken: self.taken_at,
                current: store.mutation_counter(),
            })
        } else {
            Ok(())
        }
    }

    pub fn position(&self) -> usize {
        self.cursor
    }

    pub fn current(&self) -> Option<&LexEntry> {
        self.hits.get(self.cursor).map(|(_, e)| e)
    }

    /// Move forward one entry, stopping at the last.
    pub fn forward(&mut self) -> Option<&LexEntry> {
        if self.cursor + 1 < self.hits.len() {
            self.cursor += 1;
        }
        self.current()
    }

    /// Move back one entry, stopping at the first.
    pub fn back(&mut self) -> Option<&LexEntry> {
        self.cursor = self.cursor.saturating_sub(1);
        self.current()
    }

    pub fn select(&mut self, i: usize) -> Option<&LexEntry> {
        if i < self.hits.len() {
            self.cursor = i;
        }
        self.current()
    }
}

/// Evaluate a query. An INDEX conjunct goes through the hash index (one
/// bucket); anything else scans, testing codes before decoding.
pub fn eval_query(store: &Store, q: &Query) -> Result<ResultSet, QueryError> {
    let compiled = Compiled::new(q, store.registry())?;
    let hits = match &compiled.index {
        Some(key) => store
            .lookup_with_ids(key)?
            .into_iter()
            .filter(|(_, e)| compiled.matches_entry(e))
            .collect(),
        None => {
            let mut hits = Vec::new();
            store.scan_raw(|id, raw| {
                if compiled.matches_raw(raw) {
                    hits.push((id, store.decode_raw(raw)?));
                }
                Ok(())
            })?;
            hits
        }
    };
    Ok(ResultSet {
        query: q.clone(),
        hits,
        taken_at: store.mutation_counter(),
        cursor: 0,
    })
}

/// The result entries as flat-file text.
pub fn export_text(store: &Store, rs: &ResultSet, mode: RenderMode) -> Result<String, QueryError> {
    rs.ensure_fresh(store)?;
    Ok(serialize_lexicon_as(&rs.to_entries(), store.registry(), mode)?)
}

/// Save the results as a standalone flat-file lexicon.
pub fn export_results(
    store: &Store,
    rs: &ResultSet,
    dest: impl AsRef<Path>,
    mode: RenderMode,
) -> Result<usize, QueryError> {
    let dest = dest.as_ref();
    let text = export_text(store, rs, mode)?;
    std::fs::write(dest, text).map_err(|source| QueryError::Io {
        path: dest.to_path_buf(),
        source,
    })?;
    Ok(rs.len())
}

/// Delete every entry in a fresh result set; returns how many went.
pub fn bulk_delete(store: &mut Store, rs: &ResultSet) -> Result<usize, QueryError> {
    rs.ensure_fresh(store)?;
    for id in rs.ids() {
        store.delete_id(id)?;
    }
    Ok(rs.len())
}

/// Multi-line display block in the style of the printed lexicon tables:
/// one `LABEL: value` line per field, extra frames and examples on
/// indented continuation lines, FS values comma-separated. Unregistered
/// symbols are shown as stored.
pub fn render_entry(e: &LexEntry, mode: RenderMode, reg: &Registry) -> String {
    let frame = |name: &String| {
        reg.frame(name)
            .map_or(name.as_str(), |f| f.render(mode))
            .to_string()
    };
    let feature = |name: &String| {
        reg.feature(name)
            .map_or(name.as_str(), |f| f.render(mode))
            .to_string()
    };
    let mut out = String::new();
    let mut block = |label: &str, values: &[String]| {
        let pad = " ".repeat(label.len() + 2);
        for (i, v) in values.iter().enumerate() {
            if i == 0 {
                out.push_str(label);
                out.push_str(": ");
            } else {
                out.push_str(&pad);
            }
            out.push_str(v);
            out.push('\n');
        }
    };
    block("INDEX", std::slice::from_ref(&e.index));
    block("ENTRY", &[e.entry.join(" ")]);
    block("POS", &[e.pos.render(mode)]);
    block("FRAME", &e.frames.iter().map(frame).collect::<Vec<_>>());
    if !e.fs.is_empty() {
        block(
            "FS",
            &[e.fs.iter().map(feature).collect::<Vec<_>>().join(", ")],
        );
    }
    block("EX", &e.ex);
    out
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FeatureGroup, PosLabel, Registry, RenderMode};

/// One lexicon record.
///
/// Frames and features hold verbose registry names; whether they are
/// registered for this entry's category is checked by [`validate_entry`],
/// not by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LexEntry {
    pub index: String,
    pub entry: Vec<String>,
    pub pos: PosLabel,
    #[serde(rename = "frame")]
    pub frames: Vec<String>,
    #[serde(default)]
    pub fs: Vec<String>,
    #[serde(default)]
    pub ex: Vec<String>,
}

impl LexEntry {
    /// Single-token entry indexed under its own form.
    pub fn new(index: impl Into<String>, pos: impl Into<PosLabel>) -> LexEntry {
        let index = index.into();
        LexEntry {
            entry: vec![index.clone()],
            index,
            pos: pos.into(),
            frames: Vec::new(),
            fs: Vec::new(),
            ex: Vec::new(),
        }
    }

    pub fn with_entry<I, S>(mut self, tokens: I) -> LexEntry
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.entry = tokens.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_frames<I, S>(mut self, frames: I) -> LexEntry
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.frames = frames.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_fs<I, S>(mut self, fs: I) -> LexEntry
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.fs = fs.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_ex<I, S>(mut self, ex: I) -> LexEntry
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.ex = ex.into_iter().map(Into::into).collect();
        self
    }

    /// Replace xtag spellings of frames and features with verbose names.
    /// Unregistered symbols are left for validation to report.
    pub fn normalized(mut self, reg: &Registry) -> LexEntry {
        for f in &mut self.frames {
            if let Some(id) = reg.resolve_frame(f) {
                *f = id.verbose_name.clone();
            }
        }
        for v in &mut self.fs {
            if let Some(value) = reg.resolve_feature(v) {
                *v = value.name.clone();
            }
        }
        self
    }

    /// Copy with every registered symbol shown in `mode`.
    pub fn rendered(&self, mode: RenderMode, reg: &Registry) -> RenderedEntry {
        RenderedEntry {
            index: self.index.clone(),
            entry: self.entry.clone(),
            pos: self.pos.render(mode),
            frames: self
                .frames
                .iter()
                .map(|f| reg.frame(f).map_or(f.as_str(), |id| id.render(mode)).to_string())
                .collect(),
            fs: self
                .fs
                .iter()
                .map(|v| reg.feature(v).map_or(v.as_str(), |fv| fv.render(mode)).to_string())
                .collect(),
            ex: self.ex.clone(),
        }
    }
}

/// An entry with its symbols spelled in one render mode; same JSON shape
/// as [`LexEntry`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedEntry {
    pub index: String,
    pub entry: Vec<String>,
    pub pos: String,
    #[serde(rename = "frame")]
    pub frames: Vec<String>,
    pub fs: Vec<String>,
    pub ex: Vec<String>,
}

/// Field labels, in canonical flat-file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Field {
    Index,
    Entry,
    Pos,
    Frame,
    Fs,
    Ex,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::Index,
        Field::Entry,
        Field::Pos,
        Field::Frame,
        Field::Fs,
        Field::Ex,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Field::Index => "INDEX",
            Field::Entry => "ENTRY",
            Field::Pos => "POS",
            Field::Frame => "FRAME",
            Field::Fs => "FS",
            Field::Ex => "EX",
        }
    }

    pub fn from_label(label: &str) -> Option<Field> {
        Field::ALL
            .into_iter()
            .find(|f| f.label().eq_ignore_ascii_case(label))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    Empty,
    InvalidToken(String),
    IndexNotInEntry,
    PosArity { pos: usize, tokens: usize },
    UnknownFrame(String),
    FrameNotInPosRegistry { frame: String, pos: String },
    DuplicateFrame(String),
    UnknownFeature(String),
    DuplicateFeature(String),
    FeatureGroupConflict { group: FeatureGroup, first: String, second: String },
    BadExample(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: Field,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.field)?;
        match &self.kind {
            ViolationKind::Empty if self.field == Field::Frame => write!(f, "frames empty"),
            ViolationKind::Empty => write!(f, "required field is empty"),
            ViolationKind::InvalidToken(t) => write!(f, "invalid token {t:?}"),
            ViolationKind::IndexNotInEntry => write!(f, "index is not one of the entry tokens"),
            ViolationKind::PosArity { pos, tokens } => write!(
                f,
                "compound POS has {pos} parts but the entry has {tokens} tokens"
            ),
            ViolationKind::UnknownFrame(name) => write!(f, "unknown frame '{name}'"),
            ViolationKind::FrameNotInPosRegistry { frame, pos } => {
                write!(f, "frame not in POS registry: '{frame}' is not a {pos} frame")
            }
            ViolationKind::DuplicateFrame(name) => write!(f, "duplicate frame '{name}'"),
            ViolationKind::UnknownFeature(name) => write!(f, "unknown feature '{name}'"),
            ViolationKind::DuplicateFeature(name) => write!(f, "duplicate feature '{name}'"),
            ViolationKind::FeatureGroupConflict { group, first, second } => write!(
                f,
                "features '{first}' and '{second}' both belong to group {group}"
            ),
            ViolationKind::BadExample(why) => write!(f, "bad example sentence: {why}"),
        }
    }
}

fn bad_token(token: &str) -> bool {
    token.is_empty()
        || token
            .chars()
            .any(|c| c.is_whitespace() || c.is_control())
}

/// Check every entry invariant, reporting all violations rather than the
/// first one.
pub fn validate_entry(e: &LexEntry, reg: &Registry) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field, kind| out.push(Violation { field, kind });

    if e.index.is_empty() {
        push(Field::Index, ViolationKind::Empty);
    } else if bad_token(&e.index) {
        push(Field::Index, ViolationKind::InvalidToken(e.index.clone()));
    }

    if e.entry.is_empty() {
        push(Field::Entry, ViolationKind::Empty);
    }
    for t in &e.entry {
        if bad_token(t) {
            push(Field::Entry, ViolationKind::InvalidToken(t.clone()));
        }
    }
    if !e.index.is_empty() && !e.entry.is_empty() && !e.entry.contains(&e.index) {
        push(Field::Index, ViolationKind::IndexNotInEntry);
    }
    if e.pos.is_compound() && e.pos.arity() != e.entry.len() {
        push(
            Field::Pos,
            ViolationKind::PosArity {
                pos: e.pos.arity(),
                tokens: e.entry.len(),
            },
        );
    }

    if e.frames.is_empty() {
        push(Field::Frame, ViolationKind::Empty);
    }
    let head = e.pos.head();
    for (i, name) in e.frames.iter().enumerate() {
        if e.frames[..i].contains(name) {
            push(Field::Frame, ViolationKind::DuplicateFrame(name.clone()));
            continue;
        }
        match reg.frame(name) {
            None => push(Field::Frame, ViolationKind::UnknownFrame(name.clone())),
            Some(f) if f.pos != head => push(
                Field::Frame,
                ViolationKind::FrameNotInPosRegistry {
                    frame: name.clone(),
                    pos: head.to_string(),
                },
            ),
            Some(_) => {}
        }
    }

    let mut seen: Vec<&super::FeatureValue> = Vec::new();
    for name in &e.fs {
        let Some(value) = reg.feature(name) else {
            push(Field::Fs, ViolationKind::UnknownFeature(name.clone()));
            continue;
        };
        if seen.iter().any(|v| v.code == value.code) {
            push(Field::Fs, ViolationKind::DuplicateFeature(name.clone()));
            continue;
        }
        if let Some(prev) = seen
            .iter()
            .find(|v| v.group == value.group && value.group.is_exclusive())
        {
            push(
                Field::Fs,
                ViolationKind::FeatureGroupConflict {
                    group: value.group,
                    first: prev.name.clone(),
                    second: value.name.clone(),
                },
            );
            continue;
        }
        seen.push(value);
    }

    for s in &e.ex {
        if s.trim().is_empty() {
            push(Field::Ex, ViolationKind::BadExample("empty sentence".into()));
        } else if s.trim() != s {
            push(
                Field::Ex,
                ViolationKind::BadExample(format!("surrounding whitespace in {s:?}")),
            );
        }
    }
    out
}

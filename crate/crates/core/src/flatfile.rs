//! The ASCII/UTF-8 "flat" lexicon format: one entry per line, labelled
//! fields separated by tabs.
//!
//! ```text
//! INDEX: map<TAB>ENTRY: map out<TAB>POS: Verb Verb_Particle<TAB>FRAME: Transitive_Verb_Particle
//! ```
//!
//! Inside a field, ENTRY tokens are separated by a space, FRAME and FS
//! symbols by `/`, and EX sentences by `|`. EX text escapes `\`, `|`, tab,
//! CR and LF as `\\`, `\|`, `\t`, `\r`, `\n`. Blank lines and lines starting
//! with `#` are comments. See `docs/flat-format.md` for the full grammar.

use std::fmt;

use thiserror::Error;

use crate::lexmodel::{validate_entry, Field, LexEntry, ModelError, PosLabel, Registry, RenderMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub severity: Severity,
    pub message: String,
    pub field: Option<Field>,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "line {}: {sev}", self.line)?;
        if let Some(field) = self.field {
            write!(f, " [{field}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// One physical data line and what became of it.
#[derive(Debug, Clone)]
pub struct FlatFileRecord {
    pub line: usize,
    pub raw: String,
    pub entry: Option<LexEntry>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

#[derive(Debug, Error)]
pub enum FlatFileError {
    #[error("input is not valid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },
    #[error("cannot serialize entry {index:?}: {source}")]
    Invalid {
        index: String,
        #[source]
        source: ModelError,
    },
}

/// Parse every line, keeping the raw text alongside the outcome.
pub fn parse_records(bytes: &[u8], reg: &Registry) -> Result<Vec<FlatFileRecord>, FlatFileError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FlatFileError::Decode {
        offset: e.valid_up_to(),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let line_no = i + 1;
        let (entry, diagnostics) = parse_line(line, line_no, reg);
        out.push(FlatFileRecord {
            line: line_no,
            raw: line.to_string(),
            entry,
            diagnostics,
        });
    }
    Ok(out)
}

/// Parse a lexicon. Malformed lines are skipped and reported; the
/// remaining entries keep file order.
pub fn parse_lexicon(
    bytes: &[u8],
    reg: &Registry,
) -> Result<(Vec<LexEntry>, Vec<ParseDiagnostic>), FlatFileError> {
    let mut entries = Vec::new();
    let mut diags = Vec::new();
    for rec in parse_records(bytes, reg)? {
        entries.extend(rec.entry);
        diags.extend(rec.diagnostics);
    }
    Ok((entries, diags))
}

/// Parse exactly one line, e.g. an entry given on the command line.
pub fn parse_entry_line(line: &str, reg: &Registry) -> Result<LexEntry, Vec<ParseDiagnostic>> {
    let (entry, diags) = parse_line(line.trim_end_matches(['\r', '\n']), 1, reg);
    entry.ok_or(diags)
}

fn parse_line(line: &str, line_no: usize, reg: &Registry) -> (Option<LexEntry>, Vec<ParseDiagnostic>) {
    let mut diags = Vec::new();
    let mut error = |field: Option<Field>, message: String| {
        diags.push(ParseDiagnostic {
            line: line_no,
            severity: Severity::Error,
            message,
            field,
        })
    };

    let mut values: [Option<&str>; 6] = [None; 6];
    let mut last_seen: Option<Field> = None;
    let mut out_of_order = false;
    for chunk in line.split('\t') {
        if chunk.trim().is_empty() {
            continue;
        }
        let Some((label, value)) = chunk.split_once(':') else {
            error(None, format!("field without a label: {chunk:?}"));
            continue;
        };
        let Some(field) = Field::from_label(label.trim()) else {
            error(None, format!("unknown field label {:?}", label.trim()));
            continue;
        };
        let slot = &mut values[field as usize];
        if slot.is_some() {
            error(Some(field), "field given twice".into());
            continue;
        }
        *slot = Some(value.trim());
        if last_seen.is_some_and(|prev| prev > field) {
            out_of_order = true;
        }
        last_seen = Some(field);
    }

    for field in [Field::Index, Field::Entry, Field::Pos, Field::Frame] {
        match values[field as usize] {
            None => error(Some(field), format!("missing required field {field}")),
            Some("") => error(Some(field), format!("required field {field} is empty")),
            Some(_) => {}
        }
    }

    let pos = match values[Field::Pos as usize] {
        Some(v) if !v.is_empty() => match PosLabel::parse(v) {
            Ok(p) => Some(p),
            Err(e) => {
                error(Some(Field::Pos), e.to_string());
                None
            }
        },
        _ => None,
    };

    let split_symbols = |v: Option<&str>| -> Vec<String> {
        v.map(|v| {
            v.split('/')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        })
        .unwrap_or_default()
    };
    // xtag codes are accepted on input and normalised to verbose names.
    let frames: Vec<String> = split_symbols(values[Field::Frame as usize])
        .into_iter()
        .map(|s| match reg.resolve_frame(&s) {
            Some(f) => f.verbose_name.clone(),
            None => s,
        })
        .collect();
    let fs: Vec<String> = split_symbols(values[Field::Fs as usize])
        .into_iter()
        .map(|s| match reg.resolve_feature(&s) {
            Some(f) => f.name.clone(),
            None => s,
        })
        .collect();
    let ex = match values[Field::Ex as usize] {
        Some(v) if !v.is_empty() => match split_examples(v) {
            Ok(ex) => ex,
            Err(msg) => {
                error(Some(Field::Ex), msg);
                Vec::new()
            }
        },
        _ => Vec::new(),
    };

    if diags.iter().any(|d| d.severity == Severity::Error) {
        return (None, diags);
    }
    let Some(pos) = pos else {
        return (None, diags);
    };

    let entry = LexEntry {
        index: values[Field::Index as usize].unwrap_or_default().to_string(),
        entry: values[Field::Entry as usize]
            .unwrap_or_default()
            .split_whitespace()
            .map(String::from)
            .collect(),
        pos,
        frames,
        fs,
        ex,
    };
    for v in validate_entry(&entry, reg) {
        diags.push(ParseDiagnostic {
            line: line_no,
            severity: Severity::Error,
            message: v.to_string(),
            field: Some(v.field),
        });
    }
    if !diags.is_empty() {
        return (None, diags);
    }
    if out_of_order {
        diags.push(ParseDiagnostic {
            line: line_no,
            severity: Severity::Warning,
            message: "fields are not in canonical order INDEX ENTRY POS FRAME FS EX".into(),
            field: None,
        });
    }
    (Some(entry), diags)
}

fn split_examples(v: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('\\') => cur.push('\\'),
                Some('|') => cur.push('|'),
                Some('t') => cur.push('\t'),
                Some('n') => cur.push('\n'),
                Some('r') => cur.push('\r'),
                Some(other) => return Err(format!("unknown escape \\{other} in EX")),
                None => return Err("dangling backslash at end of EX".into()),
            },
            '|' => out.push(std::mem::take(&mut cur)),
            c => cur.push(c),
        }
    }
    out.push(cur);
    Ok(out.into_iter().map(|s| s.trim().to_string()).collect())
}

fn escape_example(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

/// Append one entry as a single line (with trailing newline). Fields are
/// always written in canonical order with verbose symbol names.
pub fn write_entry_line(e: &LexEntry, out: &mut String) {
    write_fields(e, &e.pos.to_string(), &e.frames, &e.fs, out);
}

fn write_fields<S: AsRef<str>>(e: &LexEntry, pos: &str, frames: &[S], fs: &[S], out: &mut String) {
    let join = |v: &[S], sep: &str| v.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(sep);
    out.push_str("INDEX: ");
    out.push_str(&e.index);
    out.push_str("\tENTRY: ");
    out.push_str(&e.entry.join(" "));
    out.push_str("\tPOS: ");
    out.push_str(pos);
    out.push_str("\tFRAME: ");
    out.push_str(&join(frames, "/"));
    if !fs.is_empty() {
        out.push_str("\tFS: ");
        out.push_str(&join(fs, "/"));
    }
    if !e.ex.is_empty() {
        out.push_str("\tEX: ");
        for (i, s) in e.ex.iter().enumerate() {
            if i > 0 {
                out.push('|');
            }
            escape_example(s, out);
        }
    }
    out.push('\n');
}

pub fn entry_line(e: &LexEntry) -> String {
    let mut s = String::new();
    write_entry_line(e, &mut s);
    s
}

/// Serialize a validated entry list. The first invalid entry aborts with
/// the violations it carries.
pub fn serialize_lexicon(entries: &[LexEntry], reg: &Registry) -> Result<String, FlatFileError> {
    serialize_lexicon_as(entries, reg, RenderMode::Verbose)
}

/// Like [`serialize_lexicon`], spelling POS, frames and features in
/// `mode`. Both spellings parse back to the same entries.
pub fn serialize_lexicon_as(
    entries: &[LexEntry],
    reg: &Registry,
    mode: RenderMode,
) -> Result<String, FlatFileError> {
    let mut out = String::new();
    for e in entries {
        let v = validate_entry(e, reg);
        if let Some(first) = v.first() {
            return Err(FlatFileError::Invalid {
                index: e.index.clone(),
                source: ModelError::Invalid(first.to_string()),
            });
        }
        match mode {
            RenderMode::Verbose => write_entry_line(e, &mut out),
            RenderMode::Xtag => {
                let r = e.rendered(mode, reg);
                write_fields(e, &r.pos, &r.frames, &r.fs, &mut out);
            }
        }
    }
    Ok(out)
}

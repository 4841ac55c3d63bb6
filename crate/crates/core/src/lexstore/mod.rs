//! Persistent store keyed on the INDEX field.
//!
//! A store is a single file: a fixed header, the registry it was built
//! with, and an append-only log of framed records. Entries are found
//! through a power-of-two bucket directory keyed by an FNV-1a hash of the
//! index; the directory is checkpointed into the log on close and
//! rebuilt from the log tail on open. `docs/store-format.md` has the
//! byte-level layout.

mod codec;
mod file;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::lexmodel::{ModelError, PosLabel, PosTag};

pub use codec::{decode_record, encode_record, CodecError, EncodedRecord, RawRecord};
pub use file::{CompactStats, Store, VerifyReport, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenMode {
    ReadOnly,
    ReadWrite,
}

/// Location of a live record in the log. Ids change when the store is
/// compacted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RecordId(pub u64);

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: integrity error: {detail}")]
    Integrity { path: PathBuf, detail: String },
    #[error("{path}: store format version {found} is not supported (this build reads version {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: store was built with registry {found:016x}, expected {expected:016x}")]
    RegistryMismatch {
        path: PathBuf,
        found: u64,
        expected: u64,
    },
    #[error("store is open read-only")]
    ReadOnly,
    #[error("entry already present under index '{0}'")]
    Duplicate(String),
    #[error("entry not found under index '{0}'")]
    NotFound(String),
    #[error("record {0:?} is not live")]
    UnknownRecord(RecordId),
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PosCount {
    pub entries: u64,
    pub distinct_indexes: u64,
}

/// Entry counts per POS label, computed by enumerating the store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Census {
    pub total: u64,
    pub per_pos: BTreeMap<PosLabel, PosCount>,
}

impl Census {
    pub(crate) fn from_pairs<'a>(pairs: impl IntoIterator<Item = (PosLabel, &'a str)>) -> Census {
        let mut counts: BTreeMap<PosLabel, (u64, BTreeSet<String>)> = BTreeMap::new();
        let mut total = 0;
        for (pos, index) in pairs {
            total += 1;
            let slot = counts.entry(pos).or_default();
            slot.0 += 1;
            if !slot.1.contains(index) {
                slot.1.insert(index.to_string());
            }
        }
        Census {
            total,
            per_pos: counts
                .into_iter()
                .map(|(pos, (entries, idx))| {
                    (
                        pos,
                        PosCount {
                            entries,
                            distinct_indexes: idx.len() as u64,
                        },
                    )
                })
                .collect(),
        }
    }

    /// Entries whose POS label is exactly this single category.
    pub fn entries(&self, pos: PosTag) -> u64 {
        self.per_pos
            .get(&PosLabel::simple(pos))
            .map_or(0, |c| c.entries)
    }

    /// Entries whose label is headed by this category, compounds included.
    pub fn entries_headed_by(&self, pos: PosTag) -> u64 {
        self.per_pos
            .iter()
            .filter(|(label, _)| label.head() == pos)
            .map(|(_, c)| c.entries)
            .sum()
    }
}

impl fmt::Display for Census {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>10} {:>10}", "POS", "entries", "indexes")?;
        for (pos, c) in &self.per_pos {
            writeln!(
                f,
                "{:<24} {:>10} {:>10}",
                pos.to_string(),
                c.entries,
                c.distinct_indexes
            )?;
        }
        write!(f, "{:<24} {:>10}", "total", self.total)
    }
}

//! Surface form to root lookup, loaded from a tab-separated table:
//!
//! ```text
//! # surface  pos   root  features
//! maps       Noun  map   plural
//! has        Verb  have  present,3sg
//! ```
//!
//! The features column is optional (`-` or empty means none). Any form
//! that appears as a root maps to itself for that category without an
//! explicit row.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lexmodel::PosTag;
use crate::lexstore::{Store, StoreError};

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("morph table line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Analysis {
    pub root: String,
    pub features: Vec<String>,
}

impl Analysis {
    pub fn new(root: impl Into<String>, features: &[&str]) -> Analysis {
        Analysis {
            root: root.into(),
            features: features.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MorphTable {
    rows: HashMap<(String, PosTag), BTreeSet<Analysis>>,
    roots: HashSet<(String, PosTag)>,
    len: usize,
}

pub fn load_morph(path: impl AsRef<Path>) -> Result<MorphTable, MorphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MorphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    MorphTable::parse(&text)
}

impl MorphTable {
    pub fn parse(text: &str) -> Result<MorphTable, MorphError> {
        let mut table = MorphTable::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: String| MorphError::Malformed {
                line: line_no,
                message,
            };
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !(3..=4).contains(&cols.len()) {
                return Err(malformed(format!(
                    "expected 3 or 4 tab-separated columns, found {}",
                    cols.len()
                )));
            }
            let (surface, root) = (cols[0], cols[2]);
            if surface.is_empty() || root.is_empty() {
                return Err(malformed("empty surface or root".into()));
            }
            let pos = PosTag::parse(cols[1]).map_err(|e| malformed(e.to_string()))?;
            let features = match cols.get(3) {
                None | Some(&"") | Some(&"-") => Vec::new(),
                Some(f) => f
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            };
            table.insert(surface, pos, Analysis {
                root: root.to_string(),
                features,
            });
        }
        Ok(table)
    }

    pub fn insert(&mut self, surface: &str, pos: PosTag, analysis: Analysis) {
        self.roots.insert((analysis.root.clone(), pos));
        if self
            .rows
            .entry((surface.to_string(), pos))
            .or_default()
            .insert(analysis)
        {
            self.len += 1;
        }
    }

    /// Distinct rows (duplicates collapse).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_root(&self, form: &str, pos: PosTag) -> bool {
        self.roots.contains(&(form.to_string(), pos))
    }

    /// Candidate roots for a surface form; empty when the form is unknown.
    pub fn roots_of(&self, surface: &str, pos: PosTag) -> BTreeSet<Analysis> {
        let mut out = self
            .rows
            .get(&(surface.to_string(), pos))
            .cloned()
            .unwrap_or_default();
        if self.is_root(surface, pos) {
            out.insert(Analysis {
                root: surface.to_string(),
                features: Vec::new(),
            });
        }
        out
    }

    /// Every (root, category) pair the table maps to.
    pub fn targets(&self) -> impl Iterator<Item = (&str, PosTag)> + '_ {
        self.roots.iter().map(|(r, p)| (r.as_str(), *p))
    }

    /// Root targets with no entry of that category in the store, sorted.
    pub fn missing_roots(&self, store: &Store) -> Result<Vec<(String, PosTag)>, MorphError> {
        let mut missing = Vec::new();
        for (root, pos) in self.targets() {
            let present = store.lookup(root)?.iter().any(|e| e.pos.head() == pos);
            if !present {
                missing.push((root.to_string(), pos));
            }
        }
        missing.sort();
        Ok(missing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let t = MorphTable::parse("maps\tNoun\tmap\tplural\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            t.roots_of("maps", PosTag::Noun),
            BTreeSet::from([Analysis::new("map", &["plural"])])
        );
    }

    #[test]
    fn empty_file() {
        let t = MorphTable::parse("").unwrap();
        assert!(t.is_empty());
        assert!(t.roots_of("map", PosTag::Noun).is_empty());
    }

    #[test]
    fn identity_for_known_root() {
        let t = MorphTable::parse("maps\tNoun\tmap\tplural\n").unwrap();
        assert_eq!(
            t.roots_of("map", PosTag::Noun),
            BTreeSet::from([Analysis::new("map", &[])])
        );
        assert!(t.roots_of("map", PosTag::Verb).is_empty());
        assert!(t.roots_of("qwerty", PosTag::Noun).is_empty());
    }

    #[test]
    fn duplicates_collapse_and_ambiguity_kept() {
        let text = "left\tVerb\tleave\tpast\nleft\tVerb\tleave\tpast\nleft\tAdjective\tleft\t-\nsaw\tVerb\tsee\tpast\nsaw\tVerb\tsaw\t\n";
        let t = MorphTable::parse(text).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.roots_of("saw", PosTag::Verb).len(), 2);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let err = MorphTable::parse("# c\nmaps\tNoun\n").unwrap_err();
        assert!(matches!(err, MorphError::Malformed { line: 2, .. }));
        let err = MorphTable::parse("maps\tNounish\tmap\n").unwrap_err();
        assert!(err.to_string().contains("Nounish"));
    }
}

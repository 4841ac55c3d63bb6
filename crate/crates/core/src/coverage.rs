//! Corpus coverage: how many tagged word occurrences the lexicon knows
//! under the tagged category, and which categories the misses fall into.
//!
//! A corpus is one `surface<TAB>tag` pair per line (blank lines allowed).
//! A tag map file assigns each corpus tag a category:
//!
//! ```text
//! NN      Noun
//! NNP     ProperNoun
//! CD      Number
//! POS     Genitive
//! ,       Skip
//! UH      Other
//! ```
//!
//! Categories are the eight POS names plus `ProperNoun` (looked up as
//! Noun, reported separately), `Other` (counted, never found), and the
//! removal classes `Number`, `Genitive` and `Skip`.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::lexmodel::PosTag;
use crate::lexstore::{Store, StoreError};
use crate::morph::MorphTable;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("tag map line {line}: {message}")]
    TagMapSyntax { line: usize, message: String },
    #[error("corpus line {line}: {message}")]
    CorpusSyntax { line: usize, message: String },
    #[error("corpus tag '{0}' is not in the tag map")]
    UnknownTag(String),
    #[error("corpus has no countable tokens after cleaning")]
    EmptyCorpus,
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagCategory {
    Pos(PosTag),
    ProperNoun,
    Other,
    Number,
    Genitive,
    Skip,
}

impl TagCategory {
    fn parse(s: &str) -> Option<TagCategory> {
        Some(match s {
            "ProperNoun" => TagCategory::ProperNoun,
            "Other" => TagCategory::Other,
            "Number" => TagCategory::Number,
            "Genitive" => TagCategory::Genitive,
            "Skip" => TagCategory::Skip,
            _ => TagCategory::Pos(PosTag::parse(s).ok()?),
        })
    }

    fn removed(self) -> bool {
        matches!(self, TagCategory::Number | TagCategory::Genitive | TagCategory::Skip)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TagMap {
    map: HashMap<String, TagCategory>,
}

impl TagMap {
    pub fn load(path: impl AsRef<Path>) -> Result<TagMap, CoverageError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CoverageError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        TagMap::parse(&text)
    }

    pub fn parse(text: &str) -> Result<TagMap, CoverageError> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("##") {
                continue;
            }
            let bad = |message: String| CoverageError::TagMapSyntax { line: i + 1, message };
            let mut cols = line.split_whitespace();
            let (Some(tag), Some(cat), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(bad(format!("expected TAG CATEGORY, found {line:?}")));
            };
            let cat = TagCategory::parse(cat).ok_or_else(|| bad(format!("unknown category '{cat}'")))?;
            if map.insert(tag.to_string(), cat).is_some() {
                return Err(bad(format!("tag '{tag}' mapped twice")));
            }
        }
        Ok(TagMap { map })
    }

    pub fn category(&self, tag: &str) -> Option<TagCategory> {
        self.map.get(tag).copied()
    }
}

/// A corpus token as read from the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawToken {
    pub surface: String,
    pub tag: String,
}

impl RawToken {
    pub fn new(surface: impl Into<String>, tag: impl Into<String>) -> RawToken {
        RawToken {
            surface: surface.into(),
            tag: tag.into(),
        }
    }
}

pub fn read_corpus(text: &str) -> Result<Vec<RawToken>, CoverageError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CoverageError::CorpusSyntax { line: i + 1, message };
        let (surface, tag) = match line.split_once('\t') {
            Some(pair) => pair,
            None => line
                .trim()
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| bad(format!("expected 'token<TAB>tag', found {line:?}")))?,
        };
        let (surface, tag) = (surface.trim(), tag.trim());
        if surface.is_empty() || tag.is_empty() || tag.contains(char::is_whitespace) {
            return Err(bad(format!("expected 'token<TAB>tag', found {line:?}")));
        }
        out.push(RawToken::new(surface, tag));
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<RawToken>, CoverageError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CoverageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(&text)
}

fn is_number(surface: &str) -> bool {
    surface.starts_with(|c: char| c.is_ascii_digit())
        && surface.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.')
}

fn is_genitive(surface: &str) -> bool {
    matches!(surface, "'s" | "'" | "\u{2019}s" | "\u{2019}")
}

/// Drop numbers and genitive markers (and tags mapped to `Skip`). Every
/// other occurrence passes through; nothing is deduplicated.
///
/// A token is removed when its tag maps to `Number`, `Genitive` or
/// `Skip`, when its surface is all digits (with `,`/`.` separators), or
/// when it is a bare `'s`/`'` whose tag is not mapped to a lexical
/// category.
pub fn clean_stream<I>(tokens: I, tags: &TagMap) -> Vec<RawToken>
where
    I: IntoIterator<Item = RawToken>,
{
    tokens
        .into_iter()
        .filter(|t| {
            let cat = tags.category(&t.tag);
            if cat.is_some_and(TagCategory::removed) || is_number(&t.surface) {
                return false;
            }
            let lexical = matches!(cat, Some(TagCategory::Pos(_) | TagCategory::ProperNoun));
            !(is_genitive(&t.surface) && !lexical)
        })
        .collect()
}

/// Categories the misses are broken down into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MissCategory {
    ProperNoun,
    Noun,
    Adjective,
    Adverb,
    Verb,
    Other,
}

impl MissCategory {
    pub const ALL: [MissCategory; 6] = [
        MissCategory::ProperNoun,
        MissCategory::Noun,
        MissCategory::Adjective,
        MissCategory::Adverb,
        MissCategory::Verb,
        MissCategory::Other,
    ];

    pub fn key(self) -> &'static str {
        match self {
            MissCategory::ProperNoun => "proper_noun",
            MissCategory::Noun => "noun",
            MissCategory::Adjective => "adjective",
            MissCategory::Adverb => "adverb",
            MissCategory::Verb => "verb",
            MissCategory::Other => "other",
        }
    }

    fn heading(self) -> &'static str {
        match self {
            MissCategory::ProperNoun => "Proper N",
            MissCategory::Noun => "Nouns",
            MissCategory::Adjective => "Adj",
            MissCategory::Adverb => "Adv",
            MissCategory::Verb => "Verbs",
            MissCategory::Other => "Other",
        }
    }
}

/// A counted token: surface plus the lexicon category its tag maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusToken {
    pub surface: String,
    pub tag: String,
    /// Category to look up in the lexicon; `None` for `Other` tags.
    pub pos: Option<PosTag>,
    pub proper_noun: bool,
}

impl CorpusToken {
    pub fn map(raw: &RawToken, tags: &TagMap) -> Result<CorpusToken, CoverageError> {
        let cat = tags
            .category(&raw.tag)
            .ok_or_else(|| CoverageError::UnknownTag(raw.tag.clone()))?;
        let (pos, proper_noun) = match cat {
            TagCategory::Pos(p) => (Some(p), false),
            TagCategory::ProperNoun => (Some(PosTag::Noun), true),
            _ => (None, false),
        };
        Ok(CorpusToken {
            surface: raw.surface.clone(),
            tag: raw.tag.clone(),
            pos,
            proper_noun,
        })
    }

    pub fn miss_category(&self) -> MissCategory {
        if self.proper_noun {
            return MissCategory::ProperNoun;
        }
        match self.pos {
            Some(PosTag::Noun) => MissCategory::Noun,
            Some(PosTag::Adjective) => MissCategory::Adjective,
            Some(PosTag::Adverb) => MissCategory::Adverb,
            Some(PosTag::Verb) => MissCategory::Verb,
            _ => MissCategory::Other,
        }
    }
}

/// Surface forms tried for a token: the surface itself, then its
/// lowercase form unless the token is a proper noun (sentence-initial
/// capitals).
pub fn surface_variants(tok: &CorpusToken) -> Vec<String> {
    let mut out = vec![tok.surface.clone()];
    let lower = tok.surface.to_lowercase();
    if !tok.proper_noun && lower != tok.surface {
        out.push(lower);
    }
    out
}

/// True when some root of the token (or the surface itself, if the morph
/// table does not know it) has an entry of the token's category. Frames
/// are not checked.
pub fn is_hit(tok: &CorpusToken, store: &Store, morph: &MorphTable) -> Result<bool, CoverageError> {
    let Some(pos) = tok.pos else {
        return Ok(false);
    };
    for surface in surface_variants(tok) {
        let analyses = morph.roots_of(&surface, pos);
        let candidates: Vec<&str> = if analyses.is_empty() {
            vec![surface.as_str()]
        } else {
            analyses.iter().map(|a| a.root.as_str()).collect()
        };
        for root in candidates {
            if store.lookup(root)?.iter().any(|e| e.pos.head() == pos) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Additive hit/miss tallies; partial counts over corpus slices merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CoverageCounts {
    pub hits: u64,
    pub total: u64,
    pub misses: [u64; 6],
}

impl CoverageCounts {
    pub fn non_hits(&self) -> u64 {
        self.total - self.hits
    }

    pub fn misses_in(&self, c: MissCategory) -> u64 {
        self.misses[c as usize]
    }

    pub fn record(&mut self, hit: bool, category: MissCategory) {
        self.total += 1;
        if hit {
            self.hits += 1;
        } else {
            self.misses[category as usize] += 1;
        }
    }

    pub fn merge(&mut self, other: &CoverageCounts) {
        self.hits += other.hits;
        self.total += other.total;
        for (a, b) in self.misses.iter_mut().zip(other.misses) {
            *a += b;
        }
    }
}

/// Count already-cleaned tokens.
pub fn count_tokens(
    tokens: &[RawToken],
    store: &Store,
    morph: &MorphTable,
    tags: &TagMap,
) -> Result<CoverageCounts, CoverageError> {
    let mut counts = CoverageCounts::default();
    for raw in tokens {
        let tok = CorpusToken::map(raw, tags)?;
        counts.record(is_hit(&tok, store, morph)?, tok.miss_category());
    }
    Ok(counts)
}

/// A percentage held as an integer count of `10^-decimals` units,
/// rounded half up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Percent {
    pub scaled: u64,
    pub decimals: u32,
}

impl Percent {
    pub fn of(part: u64, whole: u64, decimals: u32) -> Percent {
        assert!(whole > 0, "percentage of an empty total");
        let scale = 100 * 10u128.pow(decimals);
        let num = u128::from(part) * scale * 2 + u128::from(whole);
        let scaled = num / (2 * u128::from(whole));
        Percent {
            scaled: scaled as u64,
            decimals,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.scaled as f64 / 10f64.powi(self.decimals as i32)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = 10u64.pow(self.decimals);
        if self.decimals == 0 {
            write!(f, "{}", self.scaled)
        } else {
            write!(
                f,
                "{}.{:0width$}",
                self.scaled / unit,
                self.scaled % unit,
                width = self.decimals as usize
            )
        }
    }
}

/// Each category's share of the misses, one decimal. Empty when nothing
/// was missed.
pub fn missing_breakdown(counts: &CoverageCounts) -> Vec<(MissCategory, Percent)> {
    let non_hits = counts.non_hits();
    if non_hits == 0 {
        return Vec::new();
    }
    MissCategory::ALL
        .iter()
        .map(|c| (*c, Percent::of(counts.misses_in(*c), non_hits, 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub corpus: String,
    pub hits: u64,
    pub total: u64,
    pub percent: Percent,
    pub non_hits: u64,
    pub breakdown: Vec<(MissCategory, Percent)>,
    pub counts: CoverageCounts,
}

impl CoverageReport {
    pub fn from_counts(corpus: impl Into<String>, counts: CoverageCounts) -> Result<CoverageReport, CoverageError> {
        if counts.total == 0 {
            return Err(CoverageError::EmptyCorpus);
        }
        Ok(CoverageReport {
            corpus: corpus.into(),
            hits: counts.hits,
            total: counts.total,
            percent: Percent::of(counts.hits, counts.total, 2),
            non_hits: counts.non_hits(),
            breakdown: missing_breakdown(&counts),
            counts,
        })
    }

    pub fn share(&self, c: MissCategory) -> Option<Percent> {
        self.breakdown.iter().find(|(k, _)| *k == c).map(|(_, p)| *p)
    }

    /// Two aligned tables: hit rate, then the miss breakdown.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<12} {:>12} {:>12} {:>9}\n", "", "Number", "Total #", "Percent");
        s.push_str(&format!("{:<12} {:>12} {:>12} {:>9}\n", "Corpus", "of Hits", "of Words", "Hit"));
        s.push_str(&format!(
            "{:<12} {:>12} {:>12} {:>8}%\n\n",
            self.corpus, self.hits, self.total, self.percent.to_string()
        ));
        s.push_str(&format!("{:<12} {:>12}", "", "Number of"));
        for _ in MissCategory::ALL {
            s.push_str(&format!(" {:>9}", "Percent"));
        }
        s.push('\n');
        s.push_str(&format!("{:<12} {:>12}", "Corpus", "Non-hits"));
        for c in MissCategory::ALL {
            s.push_str(&format!(" {:>9}", c.heading()));
        }
        s.push('\n');
        s.push_str(&format!("{:<12} {:>12}", self.corpus, self.non_hits));
        for c in MissCategory::ALL {
            match self.share(c) {
                Some(p) => s.push_str(&format!(" {:>8}%", p.to_string())),
                None => s.push_str(&format!(" {:>9}", "-")),
            }
        }
        s.push('\n');
        s
    }

    /// `key=value` lines for scripts.
    pub fn to_key_values(&self) -> String {
        let mut s = format!(
            "corpus={}\nhits={}\ntotal={}\npercent_hit={}\nnon_hits={}\n",
            self.corpus, self.hits, self.total, self.percent, self.non_hits
        );
        for c in MissCategory::ALL {
            s.push_str(&format!("miss_count_{}={}\n", c.key(), self.counts.misses_in(c)));
        }
        for (c, p) in &self.breakdown {
            s.push_str(&format!("miss_percent_{}={}\n", c.key(), p));
        }
        s
    }
}

/// Clean, map and count a corpus, then summarise it.
pub fn coverage_report(
    name: &str,
    corpus: Vec<RawToken>,
    store: &Store,
    morph: &MorphTable,
    tags: &TagMap,
) -> Result<CoverageReport, CoverageError> {
    let cleaned = clean_stream(corpus, tags);
    if cleaned.is_empty() {
        return Err(CoverageError::EmptyCorpus);
    }
    let counts = count_tokens(&cleaned, store, morph, tags)?;
    CoverageReport::from_counts(name, counts)
}

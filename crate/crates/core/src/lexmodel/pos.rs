use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ModelError, RenderMode};

/// The eight part-of-speech categories an entry can carry.
///
/// Discriminants double as the on-disk POS codes, so the order here is
/// frozen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosTag {
    Adjective = 0,
    Adverb = 1,
    Complementizer = 2,
    Conjunction = 3,
    Determiner = 4,
    Noun = 5,
    Preposition = 6,
    Verb = 7,
}

impl PosTag {
    pub const ALL: [PosTag; 8] = [
        PosTag::Adjective,
        PosTag::Adverb,
        PosTag::Complementizer,
        PosTag::Conjunction,
        PosTag::Determiner,
        PosTag::Noun,
        PosTag::Preposition,
        PosTag::Verb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosTag::Adjective => "Adjective",
            PosTag::Adverb => "Adverb",
            PosTag::Complementizer => "Complementizer",
            PosTag::Conjunction => "Conjunction",
            PosTag::Determiner => "Determiner",
            PosTag::Noun => "Noun",
            PosTag::Preposition => "Preposition",
            PosTag::Verb => "Verb",
        }
    }

    pub fn xtag_code(self) -> &'static str {
        match self {
            PosTag::Adjective => "A",
            PosTag::Adverb => "Ad",
            PosTag::Complementizer => "Comp",
            PosTag::Conjunction => "Conj",
            PosTag::Determiner => "D",
            PosTag::Noun => "N",
            PosTag::Preposition => "P",
            PosTag::Verb => "V",
        }
    }

    pub fn render(self, mode: RenderMode) -> &'static str {
        match mode {
            RenderMode::Verbose => self.name(),
            RenderMode::Xtag => self.xtag_code(),
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<PosTag> {
        PosTag::ALL.get(code as usize).copied()
    }

    /// Accepts the verbose name or the xtag code.
    pub fn parse(symbol: &str) -> Result<PosTag, ModelError> {
        PosTag::ALL
            .iter()
            .copied()
            .find(|p| p.name() == symbol || p.xtag_code() == symbol)
            .ok_or_else(|| ModelError::UnknownPos(symbol.to_string()))
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PosTag {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::parse(s)
    }
}

/// One element of a POS label. Multi-token entries such as verb-particle
/// constructions label each token separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosPart {
    Tag(PosTag),
    VerbParticle,
}

const VERB_PARTICLE: &str = "Verb_Particle";
const VERB_PARTICLE_XTAG: &str = "PL";
const VERB_PARTICLE_CODE: u8 = 8;

impl PosPart {
    pub fn render(self, mode: RenderMode) -> &'static str {
        match (self, mode) {
            (PosPart::Tag(t), m) => t.render(m),
            (PosPart::VerbParticle, RenderMode::Verbose) => VERB_PARTICLE,
            (PosPart::VerbParticle, RenderMode::Xtag) => VERB_PARTICLE_XTAG,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            PosPart::Tag(t) => t.code(),
            PosPart::VerbParticle => VERB_PARTICLE_CODE,
        }
    }

    pub fn from_code(code: u8) -> Option<PosPart> {
        if code == VERB_PARTICLE_CODE {
            Some(PosPart::VerbParticle)
        } else {
            PosTag::from_code(code).map(PosPart::Tag)
        }
    }

    pub fn parse(symbol: &str) -> Result<PosPart, ModelError> {
        if symbol == VERB_PARTICLE || symbol == VERB_PARTICLE_XTAG {
            return Ok(PosPart::VerbParticle);
        }
        PosTag::parse(symbol).map(PosPart::Tag)
    }
}

/// The POS field of an entry: a single category, or a compound sequence
/// whose first element is a base category (e.g. `Verb Verb_Particle`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PosLabel {
    head: PosTag,
    rest: Vec<PosPart>,
}

impl PosLabel {
    pub fn simple(tag: PosTag) -> PosLabel {
        PosLabel {
            head: tag,
            rest: Vec::new(),
        }
    }

    pub fn compound(head: PosTag, rest: Vec<PosPart>) -> PosLabel {
        PosLabel { head, rest }
    }

    /// Rebuild a label from its part codes, as stored on disk.
    pub fn from_parts(parts: &[PosPart]) -> Result<PosLabel, ModelError> {
        match parts.split_first() {
            Some((PosPart::Tag(head), rest)) => Ok(PosLabel {
                head: *head,
                rest: rest.to_vec(),
            }),
            Some((PosPart::VerbParticle, _)) => Err(ModelError::UnknownPos(format!(
                "{VERB_PARTICLE} cannot head a POS label"
            ))),
            None => Err(ModelError::UnknownPos(String::new())),
        }
    }

    /// The base category that selects the frame registry.
    pub fn head(&self) -> PosTag {
        self.head
    }

    pub fn is_compound(&self) -> bool {
        !self.rest.is_empty()
    }

    pub fn arity(&self) -> usize {
        1 + self.rest.len()
    }

    pub fn parts(&self) -> impl Iterator<Item = PosPart> + '_ {
        std::iter::once(PosPart::Tag(self.head)).chain(self.rest.iter().copied())
    }

    pub fn render(&self, mode: RenderMode) -> String {
        self.render_with(mode, " ")
    }

    pub fn render_with(&self, mode: RenderMode, sep: &str) -> String {
        self.parts()
            .map(|p| p.render(mode))
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// Parses whitespace- or `+`-separated parts; both verbose names and
    /// xtag codes are accepted.
    pub fn parse(text: &str) -> Result<PosLabel, ModelError> {
        let parts = text
            .split(|c: char| c.is_whitespace() || c == '+')
            .filter(|s| !s.is_empty())
            .map(PosPart::parse)
            .collect::<Result<Vec<_>, _>>()?;
        if parts.is_empty() {
            return Err(ModelError::UnknownPos(text.to_string()));
        }
        PosLabel::from_parts(&parts)
    }
}

impl From<PosTag> for PosLabel {
    fn from(tag: PosTag) -> Self {
        PosLabel::simple(tag)
    }
}

impl fmt::Display for PosLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(RenderMode::Verbose))
    }
}

impl FromStr for PosLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosLabel::parse(s)
    }
}

impl TryFrom<String> for PosLabel {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        PosLabel::parse(&value)
    }
}

impl From<PosLabel> for String {
    fn from(value: PosLabel) -> Self {
        value.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_eight_base_categories() {
        assert_eq!(PosTag::ALL.len(), 8);
        for (i, t) in PosTag::ALL.iter().enumerate() {
            assert_eq!(t.code() as usize, i);
            assert_eq!(PosTag::from_code(i as u8), Some(*t));
        }
        assert_eq!(PosTag::from_code(8), None);
    }

    #[test]
    fn rejects_unknown_symbol() {
        let err = PosTag::parse("Interjection").unwrap_err();
        assert!(err.to_string().contains("Interjection"));
        assert!(PosLabel::parse("Noun Gerund").is_err());
    }

    #[test]
    fn accepts_xtag_verb_alias() {
        assert_eq!(PosTag::parse("V").unwrap(), PosTag::Verb);
        assert_eq!(PosLabel::parse("V").unwrap(), PosLabel::simple(PosTag::Verb));
    }

    #[test]
    fn compound_label() {
        let label = PosLabel::parse("Verb Verb_Particle").unwrap();
        assert_eq!(label.head(), PosTag::Verb);
        assert_eq!(label.arity(), 2);
        assert_eq!(label.to_string(), "Verb Verb_Particle");
        assert_eq!(label.render(RenderMode::Xtag), "V PL");
        assert_eq!(PosLabel::parse("Verb+Verb_Particle").unwrap(), label);
        assert!(PosLabel::parse("Verb_Particle Verb").is_err());
    }
}

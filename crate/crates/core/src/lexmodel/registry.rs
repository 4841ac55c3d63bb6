use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use super::{ModelError, PosTag, RenderMode};

const HEADER: &str = "synlex-registry";
const SUPPORTED_VERSION: u32 = 1;
const BUILTIN_TEXT: &str = include_str!("../../data/registry.txt");

/// A registered frame: the verbose name, its xtag short code and the
/// category whose registry it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameId {
    pub pos: PosTag,
    pub verbose_name: String,
    pub xtag_name: String,
    pub code: u16,
}

impl FrameId {
    pub fn render(&self, mode: RenderMode) -> &str {
        match mode {
            RenderMode::Verbose => &self.verbose_name,
            RenderMode::Xtag => &self.xtag_name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureGroup {
    Wh,
    Reflexive,
    Number,
    Complement,
    Ergativity,
    AuxForm,
    AuxGoesOn,
    Other,
}

impl FeatureGroup {
    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Wh => "wh",
            FeatureGroup::Reflexive => "reflexive",
            FeatureGroup::Number => "number",
            FeatureGroup::Complement => "complement",
            FeatureGroup::Ergativity => "ergativity",
            FeatureGroup::AuxForm => "aux-form",
            FeatureGroup::AuxGoesOn => "aux-goes-on",
            FeatureGroup::Other => "other",
        }
    }

    fn requires_polarity(self) -> bool {
        matches!(self, FeatureGroup::Wh | FeatureGroup::Reflexive)
    }

    /// `Other` collects unrelated values, so it is the one group an entry
    /// may draw several values from.
    pub fn is_exclusive(self) -> bool {
        self != FeatureGroup::Other
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "wh" => FeatureGroup::Wh,
            "reflexive" => FeatureGroup::Reflexive,
            "number" => FeatureGroup::Number,
            "complement" => FeatureGroup::Complement,
            "ergativity" => FeatureGroup::Ergativity,
            "aux-form" => FeatureGroup::AuxForm,
            "aux-goes-on" => FeatureGroup::AuxGoesOn,
            "other" => FeatureGroup::Other,
            _ => return Err(format!("unknown feature group '{s}'")),
        })
    }
}

/// A feature-structure symbol such as `wh+`, `plural` or `Goes_on_Base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureValue {
    /// Full verbose spelling, polarity included (`wh+`).
    pub name: String,
    pub polarity: Option<Polarity>,
    pub group: FeatureGroup,
    pub xtag_name: String,
    pub code: u16,
}

impl FeatureValue {
    pub fn render(&self, mode: RenderMode) -> &str {
        match mode {
            RenderMode::Verbose => &self.name,
            RenderMode::Xtag => &self.xtag_name,
        }
    }

    /// Name without its polarity suffix.
    pub fn base_name(&self) -> &str {
        match self.polarity {
            Some(_) => &self.name[..self.name.len() - 1],
            None => &self.name,
        }
    }
}

/// Frame inventory for every category plus the feature vocabulary.
///
/// Immutable once built. Frame and feature codes are their positions in
/// the source file, which is what the store persists.
#[derive(Debug)]
pub struct Registry {
    version: u32,
    frames: Vec<FrameId>,
    features: Vec<FeatureValue>,
    by_pos: [Vec<u16>; 8],
    frame_names: HashMap<String, u16>,
    frame_codes: HashMap<String, u16>,
    feature_names: HashMap<String, u16>,
    feature_codes: HashMap<String, u16>,
    canonical: String,
    hash: u64,
}

impl Registry {
    /// The registry shipped with the crate.
    pub fn builtin() -> Arc<Registry> {
        static BUILTIN: OnceLock<Arc<Registry>> = OnceLock::new();
        BUILTIN
            .get_or_init(|| {
                Arc::new(Registry::parse(BUILTIN_TEXT).expect("built-in registry is valid"))
            })
            .clone()
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Registry, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::RegistryFile {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Registry::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Registry, ModelError> {
        let bad = |line: usize, message: String| ModelError::RegistryFile { line, message };
        let mut version = None;
        let mut frames = Vec::new();
        let mut features = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [HEADER, v] => {
                    let v: u32 = v
                        .parse()
                        .map_err(|_| bad(line_no, format!("bad version '{v}'")))?;
                    if v != SUPPORTED_VERSION {
                        return Err(bad(
                            line_no,
                            format!("unsupported registry version {v} (expected {SUPPORTED_VERSION})"),
                        ));
                    }
                    version = Some(v);
                }
                ["frame", pos, name, code] => {
                    let pos = PosTag::parse(pos).map_err(|e| bad(line_no, e.to_string()))?;
                    check_symbol(name).map_err(|m| bad(line_no, m))?;
                    check_symbol(code).map_err(|m| bad(line_no, m))?;
                    frames.push(FrameId {
                        pos,
                        verbose_name: name.to_string(),
                        xtag_name: code.to_string(),
                        code: 0,
                    });
                }
                ["feature", group, name, code] => {
                    let group: FeatureGroup = group.parse().map_err(|m| bad(line_no, m))?;
                    check_symbol(name).map_err(|m| bad(line_no, m))?;
                    check_symbol(code).map_err(|m| bad(line_no, m))?;
                    let polarity = match name.chars().last() {
                        Some('+') => Some(Polarity::Plus),
                        Some('-') if name.len() > 1 => Some(Polarity::Minus),
                        _ => None,
                    };
                    if group.requires_polarity() && polarity.is_none() {
                        return Err(bad(
                            line_no,
                            format!("feature '{name}' in group {group} needs an explicit +/- polarity"),
                        ));
                    }
                    features.push(FeatureValue {
                        name: name.to_string(),
                        polarity: if group.requires_polarity() { polarity } else { None },
                        group,
                        xtag_name: code.to_string(),
                        code: 0,
                    });
                }
                _ => return Err(bad(line_no, format!("unrecognised line '{line}'"))),
            }
        }
        let version = version.ok_or_else(|| bad(0, format!("missing '{HEADER}' header line")))?;
        Registry::build(version, frames, features)
    }

    fn build(
        version: u32,
        mut frames: Vec<FrameId>,
        mut features: Vec<FeatureValue>,
    ) -> Result<Registry, ModelError> {
        let dup = |what: &str, name: &str| ModelError::RegistryFile {
            line: 0,
            message: format!("duplicate {what} '{name}'"),
        };
        if frames.len() > u16::MAX as usize || features.len() > u16::MAX as usize {
            return Err(ModelError::RegistryFile {
                line: 0,
                message: "too many symbols".into(),
            });
        }

        let mut by_pos: [Vec<u16>; 8] = Default::default();
        let mut frame_names = HashMap::new();
        let mut frame_codes = HashMap::new();
        for (i, f) in frames.iter_mut().enumerate() {
            f.code = i as u16;
            if frame_names.insert(f.verbose_name.clone(), f.code).is_some() {
                return Err(dup("frame name", &f.verbose_name));
            }
            if frame_codes.insert(f.xtag_name.clone(), f.code).is_some() {
                return Err(dup("frame xtag code", &f.xtag_name));
            }
            by_pos[f.pos.code() as usize].push(f.code);
        }
        for (name, code) in &frame_codes {
            if let Some(other) = frame_names.get(name) {
                if other != code {
                    return Err(dup("frame symbol (verbose name reused as xtag code)", name));
                }
            }
        }

        let mut feature_names = HashMap::new();
        let mut feature_codes = HashMap::new();
        for (i, f) in features.iter_mut().enumerate() {
            f.code = i as u16;
            if feature_names.insert(f.name.clone(), f.code).is_some() {
                return Err(dup("feature name", &f.name));
            }
            if feature_codes.insert(f.xtag_name.clone(), f.code).is_some() {
                return Err(dup("feature xtag code", &f.xtag_name));
            }
        }
        for (name, code) in &feature_codes {
            if let Some(other) = feature_names.get(name) {
                if other != code {
                    return Err(dup("feature symbol (verbose name reused as xtag code)", name));
                }
            }
        }
        for pos in PosTag::ALL {
            if by_pos[pos.code() as usize].is_empty() {
                return Err(ModelError::RegistryFile {
                    line: 0,
                    message: format!("no frames registered for {pos}"),
                });
            }
        }

        let canonical = canonical_text(version, &frames, &features);
        let hash = crate::fnv1a64(canonical.as_bytes());
        Ok(Registry {
            version,
            frames,
            features,
            by_pos,
            frame_names,
            frame_codes,
            feature_names,
            feature_codes,
            canonical,
            hash,
        })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// FNV-1a hash of the canonical text; stores record it to detect a
    /// vocabulary mismatch on open.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// Normalised file form (no comments, fixed column layout).
    pub fn canonical_text(&self) -> &str {
        &self.canonical
    }

    pub fn frames(&self) -> &[FrameId] {
        &self.frames
    }

    pub fn features(&self) -> &[FeatureValue] {
        &self.features
    }

    pub fn frames_for_pos(&self, pos: PosTag) -> impl ExactSizeIterator<Item = &FrameId> + '_ {
        self.by_pos[pos.code() as usize]
            .iter()
            .map(|c| &self.frames[*c as usize])
    }

    /// Like [`Registry::frames_for_pos`] but from a textual category symbol.
    pub fn frames_for_symbol(&self, pos: &str) -> Result<Vec<&FrameId>, ModelError> {
        Ok(self.frames_for_pos(PosTag::parse(pos)?).collect())
    }

    pub fn frame(&self, name: &str) -> Option<&FrameId> {
        self.frame_names
            .get(name)
            .map(|c| &self.frames[*c as usize])
    }

    /// Resolve a verbose name or xtag code.
    pub fn resolve_frame(&self, symbol: &str) -> Option<&FrameId> {
        self.frame(symbol).or_else(|| {
            self.frame_codes
                .get(symbol)
                .map(|c| &self.frames[*c as usize])
        })
    }

    pub fn frame_by_code(&self, code: u16) -> Option<&FrameId> {
        self.frames.get(code as usize)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureValue> {
        self.feature_names
            .get(name)
            .map(|c| &self.features[*c as usize])
    }

    pub fn resolve_feature(&self, symbol: &str) -> Option<&FeatureValue> {
        self.feature(symbol).or_else(|| {
            self.feature_codes
                .get(symbol)
                .map(|c| &self.features[*c as usize])
        })
    }

    pub fn feature_by_code(&self, code: u16) -> Option<&FeatureValue> {
        self.features.get(code as usize)
    }

    /// Render a registered frame name in the requested mode.
    pub fn render_frame(&self, name: &str, mode: RenderMode) -> Result<&str, ModelError> {
        self.frame(name)
            .map(|f| f.render(mode))
            .ok_or_else(|| ModelError::UnknownFrame(name.to_string()))
    }

    pub fn render_feature(&self, name: &str, mode: RenderMode) -> Result<&str, ModelError> {
        self.feature(name)
            .map(|f| f.render(mode))
            .ok_or_else(|| ModelError::UnknownFeature(name.to_string()))
    }

    /// Build a feature list, rejecting unknown symbols, duplicates and two
    /// values from the same exclusive group (e.g. `wh+` with `wh-`).
    pub fn feature_set<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<&FeatureValue>, ModelError> {
        let mut out: Vec<&FeatureValue> = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let value = self
                .feature(name)
                .ok_or_else(|| ModelError::UnknownFeature(name.to_string()))?;
            if out.iter().any(|v| v.code == value.code) {
                return Err(ModelError::DuplicateFeature(name.to_string()));
            }
            if let Some(prev) = out
                .iter()
                .find(|v| v.group == value.group && value.group.is_exclusive())
            {
                return Err(ModelError::FeatureGroupConflict {
                    group: value.group,
                    first: prev.name.clone(),
                    second: value.name.clone(),
                });
            }
            out.push(value);
        }
        Ok(out)
    }
}

fn check_symbol(s: &str) -> Result<(), String> {
    if s.is_empty() {
        return Err("empty symbol".into());
    }
    if let Some(c) = s
        .chars()
        .find(|c| c.is_whitespace() || c.is_control() || matches!(c, '/' | '|' | ',' | '=' | '\\'))
    {
        return Err(format!("symbol '{s}' contains reserved character {c:?}"));
    }
    Ok(())
}

fn canonical_text(version: u32, frames: &[FrameId], features: &[FeatureValue]) -> String {
    let mut out = format!("{HEADER}\t{version}\n");
    for f in frames {
        out.push_str(&format!(
            "frame\t{}\t{}\t{}\n",
            f.pos, f.verbose_name, f.xtag_name
        ));
    }
    for f in features {
        out.push_str(&format!(
            "feature\t{}\t{}\t{}\n",
            f.group, f.name, f.xtag_name
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_sizes() {
        let reg = Registry::builtin();
        assert_eq!(reg.frames_for_pos(PosTag::Adjective).len(), 5);
        assert_eq!(reg.frames_for_pos(PosTag::Noun).len(), 7);
        assert_eq!(reg.frames_for_pos(PosTag::Verb).len(), 19);
        assert_eq!(reg.frames_for_pos(PosTag::Adverb).len(), 15);
        for minor in [
            PosTag::Complementizer,
            PosTag::Conjunction,
            PosTag::Determiner,
            PosTag::Preposition,
        ] {
            let frames: Vec<_> = reg.frames_for_pos(minor).collect();
            assert_eq!(frames.len(), 1);
            assert_eq!(frames[0].verbose_name, format!("Base_{minor}"));
        }
    }

    #[test]
    fn adjective_frames_in_order() {
        let reg = Registry::builtin();
        let names: Vec<_> = reg
            .frames_for_pos(PosTag::Adjective)
            .map(|f| f.verbose_name.as_str())
            .collect();
        assert_eq!(names.last(), Some(&"Predicative_adjective_w_sentential_subject"));
        assert_eq!(names[0], "Base_adjective");
    }

    #[test]
    fn noun_frames_include_determiner_required() {
        let reg = Registry::builtin();
        assert!(reg
            .frames_for_pos(PosTag::Noun)
            .any(|f| f.verbose_name == "Noun_Determiner_required"));
    }

    #[test]
    fn conjunction_singleton() {
        let reg = Registry::builtin();
        let frames = reg.frames_for_symbol("Conjunction").unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].verbose_name, "Base_Conjunction");
    }

    #[test]
    fn unknown_pos_symbol_named_in_error() {
        let err = Registry::builtin().frames_for_symbol("Particle").unwrap_err();
        assert!(err.to_string().contains("Particle"));
    }

    #[test]
    fn frames_for_pos_is_stable() {
        let reg = Registry::builtin();
        let a: Vec<_> = reg.frames_for_pos(PosTag::Verb).map(|f| f.code).collect();
        let b: Vec<_> = reg.frames_for_pos(PosTag::Verb).map(|f| f.code).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn render_modes_are_bijective_per_pos() {
        let reg = Registry::builtin();
        for pos in PosTag::ALL {
            for mode in [RenderMode::Verbose, RenderMode::Xtag] {
                let mut seen = std::collections::HashSet::new();
                for f in reg.frames_for_pos(pos) {
                    let rendered = f.render(mode);
                    assert!(seen.insert(rendered.to_string()), "{rendered} repeated");
                    let back = reg.resolve_frame(rendered).unwrap();
                    assert_eq!(back.code, f.code);
                    assert_eq!(reg.render_frame(&back.verbose_name, RenderMode::Verbose).unwrap(), f.verbose_name);
                }
            }
        }
    }

    #[test]
    fn render_known_frames() {
        let reg = Registry::builtin();
        assert_eq!(reg.render_frame("Transitive_Verb", RenderMode::Verbose).unwrap(), "Transitive_Verb");
        assert_eq!(reg.render_frame("Base_Adverb", RenderMode::Verbose).unwrap(), "Base_Adverb");
        let code = reg.render_frame("Transitive_Verb", RenderMode::Xtag).unwrap();
        assert_ne!(code, "Transitive_Verb");
        assert!(code.len() < "Transitive_Verb".len());
        assert!(reg.render_frame("Flying_Verb", RenderMode::Verbose).is_err());
    }

    #[test]
    fn feature_polarity() {
        let reg = Registry::builtin();
        let wh = reg.feature("wh+").unwrap();
        assert_eq!(wh.polarity, Some(Polarity::Plus));
        assert_eq!(wh.base_name(), "wh");
        assert_eq!(reg.feature("reflexive-").unwrap().polarity, Some(Polarity::Minus));
        assert_eq!(reg.feature("Non-Ergative").unwrap().polarity, None);
    }

    #[test]
    fn feature_group_uniqueness() {
        let reg = Registry::builtin();
        assert!(matches!(
            reg.feature_set(&["wh+", "wh-"]),
            Err(ModelError::FeatureGroupConflict { group: FeatureGroup::Wh, .. })
        ));
        assert!(reg.feature_set(&["wh-", "reflexive-", "plural"]).is_ok());
        assert!(reg.feature_set(&["Indicative", "Present", "Goes_on_Base"]).is_ok());
        assert!(matches!(
            reg.feature_set(&["plural", "plural"]),
            Err(ModelError::DuplicateFeature(_))
        ));
    }

    #[test]
    fn polarity_required_for_wh() {
        let text = "synlex-registry\t1\nfeature\twh\twh\twh\n";
        assert!(Registry::parse(text).is_err());
    }

    #[test]
    fn rejects_duplicate_names_and_codes() {
        let base: String = BUILTIN_TEXT.to_string();
        let dup_name = format!("{base}frame\tVerb\tTransitive_Verb\tXX\n");
        assert!(Registry::parse(&dup_name).is_err());
        let dup_code = format!("{base}frame\tVerb\tNew_Frame\tTV\n");
        assert!(Registry::parse(&dup_code).is_err());
        let extended = format!("{base}frame\tVerb\tNew_Frame\tNF\n");
        let reg = Registry::parse(&extended).unwrap();
        assert_eq!(reg.frames_for_pos(PosTag::Verb).len(), 20);
        assert_ne!(reg.hash(), Registry::builtin().hash());
    }

    #[test]
    fn rejects_version_mismatch() {
        let err = Registry::parse("synlex-registry\t9\n").unwrap_err();
        assert!(err.to_string().contains('9'));
    }

    #[test]
    fn canonical_text_reparses_to_same_hash() {
        let reg = Registry::builtin();
        let again = Registry::parse(reg.canonical_text()).unwrap();
        assert_eq!(again.hash(), reg.hash());
    }
}

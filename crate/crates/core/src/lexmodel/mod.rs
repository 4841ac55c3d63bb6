//! In-memory data model: categories, the frame/feature registry, and
//! lexical entries with their validation rules.

mod entry;
mod pos;
mod registry;

use thiserror::Error;

pub use entry::{validate_entry, Field, LexEntry, RenderedEntry, Violation, ViolationKind};
pub use pos::{PosLabel, PosPart, PosTag};
pub use registry::{FeatureGroup, FeatureValue, FrameId, Polarity, Registry};

/// Which vocabulary symbols are displayed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    #[default]
    Verbose,
    Xtag,
}

impl std::str::FromStr for RenderMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verbose" => Ok(RenderMode::Verbose),
            "xtag" => Ok(RenderMode::Xtag),
            other => Err(ModelError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown part of speech '{0}'")]
    UnknownPos(String),
    #[error("unknown frame '{0}'")]
    UnknownFrame(String),
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("duplicate feature '{0}'")]
    DuplicateFeature(String),
    #[error("features '{first}' and '{second}' both belong to group {group}")]
    FeatureGroupConflict {
        group: FeatureGroup,
        first: String,
        second: String,
    },
    #[error("unknown render mode '{0}' (expected verbose or xtag)")]
    UnknownMode(String),
    #[error("registry file, line {line}: {message}")]
    RegistryFile { line: usize, message: String },
    #[error("invalid entry: {0}")]
    Invalid(String),
}

impl ModelError {
    pub(crate) fn from_violations(v: &[Violation]) -> ModelError {
        ModelError::Invalid(
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        )
    }
}

/// Validate and turn the violation list into an error.
pub fn check_entry(e: &LexEntry, reg: &Registry) -> Result<(), ModelError> {
    let v = validate_entry(e, reg);
    if v.is_empty() {
        Ok(())
    } else {
        Err(ModelError::from_violations(&v))
    }
}

//! Syntactic lexicon toolkit.
//!
//! Entries pair an uninflected index form with a part of speech, the
//! subcategorization frames it selects and feature-structure annotations.
//! The crate covers the data model ([`lexmodel`]), the tab-separated flat
//! file ([`flatfile`]), a hash-indexed on-disk store ([`lexstore`]),
//! conjunctive search ([`query`]), surface-to-root lookup ([`morph`]),
//! corpus coverage statistics ([`coverage`]) and a local HTTP API
//! ([`service`]).

pub mod coverage;
pub mod flatfile;
pub mod lexmodel;
pub mod lexstore;
pub mod morph;
pub mod query;
pub mod service;
pub mod synth;

mod error;

pub use error::Error;
pub use lexmodel::{LexEntry, PosLabel, PosTag, Registry, RenderMode};
pub use lexstore::{OpenMode, Store};

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

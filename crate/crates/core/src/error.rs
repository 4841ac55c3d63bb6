use thiserror::Error;

use crate::coverage::CoverageError;
use crate::flatfile::FlatFileError;
use crate::lexmodel::ModelError;
use crate::lexstore::StoreError;
use crate::morph::MorphError;
use crate::query::QueryError;

/// Any failure from the crate's modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    FlatFile(#[from] FlatFileError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Morph(#[from] MorphError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

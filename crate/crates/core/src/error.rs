use std::path::PathBuf;

use thiserror::Error;

use crate::model::{Members, RiderId};

pub type Result<T, E = CtgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CtgError {
    #[error("group {0} is not in the catalog")]
    UnknownGroup(Members),

    #[error("catalog is not subset-closed: {subset} (subset of {group}) is missing")]
    MissingSubset { group: Members, subset: Members },

    #[error("rider {rider} is not a member of group {group}")]
    RiderNotInGroup { rider: RiderId, group: Members },

    #[error("overcharge constant D = {d} is below the required minimum {required}")]
    DTooSmall { d: f64, required: f64 },

    #[error("group {0} has zero total singleton cost; proportional residual split is undefined")]
    ZeroSingletonCost(Members),

    #[error("instance has {n} riders, exhaustive search is limited to {limit}")]
    InstanceTooLarge { n: usize, limit: usize },

    #[error("notion {0} cannot be expressed as a set-partitioning problem")]
    UnsupportedNotion(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("invalid share table: {0}")]
    InvalidShares(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: row {row}: {message}")]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

use std::io;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = RasError> = std::result::Result<T, E>;

/// Every failure the simulator can report. Each variant carries a stable
/// machine-readable code (see [`RasError::code`]) that the HTTP layer
/// forwards verbatim.
#[derive(Debug, Error)]
pub enum RasError {
    #[error("configuration has {} violation(s)", .0.len())]
    InvalidConfig(Vec<Violation>),
    #[error("total demand is zero, nothing to generate")]
    EmptyPool,
    #[error("malformed IPv4 address {0:?}")]
    BadIp(String),
    #[error("first octet of {0} is not covered by the zone table")]
    UnroutableIp(String),
    #[error("invalid zone table: {0}")]
    ZoneTable(String),
    #[error("no capacities to quantify")]
    NoCapacities,
    #[error("capacities and weights must be finite and non-negative")]
    BadWeight,
    #[error("all apportionment weights are zero")]
    ZeroWeight,
    #[error("file has no completed experiments")]
    NothingToConsolidate,
    #[error("experiment file {0:?} already exists")]
    FileExists(String),
    #[error("experiment file {0:?} not found")]
    FileNotFound(String),
    #[error("invalid file name {0:?}")]
    BadName(String),
    #[error("experiment {0} not found")]
    ExperimentNotFound(u32),
    #[error("{0}")]
    Sequence(String),
    #[error("new arrival upper bound {requested} must exceed {current}")]
    BadRange { current: u64, requested: u64 },
    #[error("experiment {0} is not completed")]
    NotReady(u32),
    #[error("unknown service {0} in added demands")]
    UnknownService(u32),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RasError {
    pub fn code(&self) -> &'static str {
        match self {
            RasError::InvalidConfig(_) => "INVALID_CONFIG",
            RasError::EmptyPool => "EMPTY_POOL",
            RasError::BadIp(_) => "BAD_IP",
            RasError::UnroutableIp(_) => "UNROUTABLE_IP",
            RasError::ZoneTable(_) => "BAD_ZONE_TABLE",
            RasError::NoCapacities => "NO_CAPACITIES",
            RasError::BadWeight => "BAD_WEIGHT",
            RasError::ZeroWeight => "ZERO_WEIGHT",
            RasError::NothingToConsolidate => "NOTHING_TO_CONSOLIDATE",
            RasError::FileExists(_) => "FILE_EXISTS",
            RasError::FileNotFound(_) => "FILE_NOT_FOUND",
            RasError::BadName(_) => "BAD_NAME",
            RasError::ExperimentNotFound(_) => "EXPERIMENT_NOT_FOUND",
            RasError::Sequence(_) => "SEQUENCE",
            RasError::BadRange { .. } => "BAD_RANGE",
            RasError::NotReady(_) => "NOT_READY",
            RasError::UnknownService(_) => "UNKNOWN_SERVICE",
            RasError::Io(_) => "IO",
            RasError::Json(_) => "JSON",
            RasError::Csv(_) => "CSV",
        }
    }
}

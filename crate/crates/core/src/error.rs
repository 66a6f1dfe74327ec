use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("MalformedHeader: {0}")]
    MalformedHeader(String),
    #[error("UnknownVersion: expected {expected}, found {found}")]
    UnknownVersion { expected: &'static str, found: String },
    #[error("DimensionMismatch: expected {expected} payload bytes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("UnknownLabel: code {0} has no palette entry")]
    UnknownLabel(u8),
    #[error("EmptyStructure: the selected structure has no voxels")]
    EmptyStructure,
    #[error("SpecMismatch: grids differ")]
    SpecMismatch,
    #[error("EmptyList: at least one field is required")]
    EmptyList,
    #[error("EmptyTarget: no voxel carries a target code")]
    EmptyTarget,
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
    #[error("NonFinitePose: drill position must be finite")]
    NonFinitePose,
    #[error("NonMonotoneTimestamps: sample {index} at {t_ms} ms")]
    NonMonotoneTimestamps { index: usize, t_ms: u64 },
    #[error("UnorderedLog: event {0} precedes its predecessor")]
    UnorderedLog(usize),
    #[error("UnknownVoxel: event voxel {0:?} lies outside the plan")]
    UnknownVoxel([usize; 3]),
    #[error("LengthMismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("TooFewPairs: need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("MisalignedInputs: {0}")]
    MisalignedInputs(String),
    #[error("MalformedRecord: line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

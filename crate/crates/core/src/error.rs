use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parameter D must be at least 2, got {0}")]
    InvalidParameter(usize),

    #[error("negative entry {value} at column {column}")]
    NegativeEntry { column: usize, value: i64 },

    #[error("column {column} is not fireable: σ = {value} < D = {d}")]
    NotFireable { column: usize, value: i64, d: usize },

    #[error("diamond check needs two distinct columns, got {0} twice")]
    SameColumn(usize),

    #[error("{requested} grains exceeds the cap of {cap}")]
    MassCapExceeded { requested: u64, cap: u64 },

    #[error("shot vector was accumulated over {shot} grains, expected {expected}")]
    GrainCountMismatch { shot: u64, expected: u64 },

    #[error("operation requires D = {required}, got D = {actual}")]
    WrongParameter { required: usize, actual: usize },

    #[error("fixed point has a (2,0)^{found} prefix, (2,0)^{required} required")]
    PrefixTooShort { required: usize, found: usize },

    #[error("projection law violated: {0}")]
    ProjectionLaw(String),
}

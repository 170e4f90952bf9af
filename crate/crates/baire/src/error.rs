use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by encoding, indexing, clustering and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("base {0} out of range, supported bases are 2..=36")]
    BaseOutOfRange(u32),

    #[error("precision {0} unusable with base {1} (must be >= 1 and fit the digit space)")]
    PrecisionOutOfRange(usize, u32),

    #[error("value {0} outside the unit interval [0, 1]")]
    ValueOutOfUnitRange(f64),

    #[error("non-finite value {0} in input")]
    NonFinite(f64),

    #[error("value {value} outside fitted bounds [{lo}, {hi}] (stale bounds?)")]
    ValueOutOfBounds { value: f64, lo: f64, hi: f64 },

    #[error("cannot truncate to {requested} digits, code only has {actual}")]
    TruncateBeyondPrecision { requested: usize, actual: usize },

    #[error("digit {digit} not valid in base {base}")]
    DigitOutOfRange { digit: u8, base: u32 },

    #[error("base mismatch: {0} vs {1}")]
    BaseMismatch(u32, u32),

    #[error("precision mismatch: index holds {expected}-digit codes, got {actual}")]
    PrecisionMismatch { expected: usize, actual: usize },

    #[error("duplicate record id {0:?}")]
    DuplicateId(String),

    #[error("unknown record id {0:?}")]
    UnknownId(String),

    #[error("level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("index is empty")]
    EmptyIndex,

    #[error("no neighbor available: index holds no other record")]
    NoNeighbor,

    #[error("record id {0:?} cannot be persisted (contains tab or line break)")]
    UnpersistableId(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{0} must be >= 1")]
    ParameterTooSmall(&'static str),

    #[error("projection bounds not fitted")]
    BoundsNotFitted,

    #[error("input must not be empty")]
    EmptyInput,

    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("need at least {min} points, got {n}")]
    TooFewPoints { n: usize, min: usize },

    #[error("labelings differ in length: {0} vs {1}")]
    LabelLengthMismatch(usize, usize),

    #[error("center bin at level {actual} does not belong to level {expected}")]
    CenterLevelMismatch { expected: usize, actual: usize },

    #[error("benchmark sizes must be ascending")]
    SizesNotAscending,

    #[error("unsupported format version {found:?}, expected {expected}")]
    FormatVersion {
        expected: &'static str,
        found: String,
    },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

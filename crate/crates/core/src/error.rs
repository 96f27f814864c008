use thiserror::Error;

use crate::symbolic::WindowSpec;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("symbol {symbol} is outside an alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("malformed point: {0}")]
    MalformedPoint(String),
    #[error("malformed word: {0}")]
    MalformedWord(String),
    #[error("not admissible: {0}")]
    Inadmissible(String),
    #[error("the subshift has an empty language")]
    EmptySubshift,
    #[error("operation needs a shift of finite type with forbidden words of length at most two")]
    NotOneStep,
    #[error("resolution must be at least 1")]
    InvalidResolution,
    #[error("resolution m = 1 is too coarse for the expansive shortcut; use m >= 2")]
    ResolutionTooCoarse,
    #[error("window {window} exceeds tree range [{base}, {top}]")]
    WindowExceedsDepth { window: WindowSpec, base: i64, top: i64 },
    #[error("window {window} is outside the certified window {certified}")]
    UncertifiedTail { window: WindowSpec, certified: WindowSpec },
    #[error("unsupported window: {0}")]
    UnsupportedWindow(String),
    #[error("horizon {n_max} is too small; need at least {needed}")]
    HorizonTooSmall { n_max: u32, needed: u32 },
    #[error("the ambient shift is not mixing")]
    NotMixing,
    #[error("the ambient shift has zero topological entropy")]
    ZeroEntropyAmbient,
    #[error("target {target} is not below the source capacity {capacity}")]
    SourceCapacityExceeded { target: f64, capacity: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("target {target} is outside [0, {available}]")]
    TargetOutOfRange { target: f64, available: f64 },
    #[error("no entropy-point source available: {0}")]
    SourceUnavailable(String),
    #[error("cover word length {k} exceeds tree depth {depth}")]
    KExceedsDepth { k: usize, depth: usize },
    #[error("trees differ in base or depth")]
    DepthMismatch,
    #[error("depth {depth} is too small for a code window of {needed}")]
    DepthTooSmall { depth: usize, needed: usize },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("the measure gives the set zero mass")]
    ZeroMass,
    #[error("the set is empty")]
    EmptySet,
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("the one-sided shift is not surjective")]
    NotSurjective,
    #[error("certificate check failed: {0}")]
    Certificate(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

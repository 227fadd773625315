use std::fmt;

use thiserror::Error;

/// A parse failure with the byte offset where it happened and what the
/// parser would have accepted there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" | "),
            self.found
        )
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Error)]
pub enum Error {
    // hierarchy
    #[error("level depth {depth} is not in dimension {dim}")]
    LevelNotInDimension { dim: String, depth: usize },
    #[error("target level {target} is below the member's level {member} in dimension {dim}")]
    LevelBelowMember { dim: String, member: usize, target: usize },
    #[error("target level {target} is above the member's level {member} in dimension {dim}")]
    LevelAboveMember { dim: String, member: usize, target: usize },
    #[error("member {member} rolls up to both {first} and {second} in dimension {dim}")]
    InconsistentRollup {
        dim: String,
        member: String,
        first: String,
        second: String,
    },
    #[error("empty input: {0}")]
    EmptyFile(String),
    #[error("member id {id} at depth {depth} is not valid in dimension {dim}")]
    InvalidMember { dim: String, depth: usize, id: u32 },

    // engine
    #[error("unknown measure {0}")]
    UnknownMeasure(String),
    #[error("unknown level {0}")]
    UnknownLevel(String),
    #[error("unknown dimension {0}")]
    UnknownDimension(String),
    #[error("unknown member {member} at {level}")]
    UnknownMember { level: String, member: String },
    #[error("cells span {left} and {right} dimensions")]
    DimensionMismatch { left: usize, right: usize },
    #[error("duplicate detailed coordinate at row {0}")]
    DuplicateCoordinate(usize),
    #[error("malformed fact data: {0}")]
    MalformedFacts(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("coordinate space too large to enumerate ({0} coordinates)")]
    SignatureTooLarge(u128),

    // qlang
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("more than one atom on dimension {0}")]
    DuplicateDimensionAtom(String),
    #[error("more than one grouper on dimension {0}")]
    DuplicateDimensionGrouper(String),
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("intervals overlap for measure {measure}: {first} and {second}")]
    OverlappingIntervals {
        measure: String,
        first: String,
        second: String,
    },
    #[error("label intervals for {measure} leave a gap at {at}")]
    GapInCoverage { measure: String, at: f64 },
    #[error("ambiguous identifier {0}")]
    AmbiguousIdentifier(String),

    // context
    #[error("cached result does not match the query's evaluation")]
    CachedResultMismatch,

    // metrics
    #[error("grouper levels differ between the assessed query and the collection")]
    LevelMismatch,
    #[error("queries are not over the same schema")]
    SchemaMismatch,
    #[error("empty query collection")]
    EmptyCollection,
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("query result is empty")]
    EmptyResult,
    #[error("pairwise distance computation needs {pairs} pairs, over the cap of {cap}")]
    TooManyPairs { pairs: u128, cap: u128 },
    #[error("distance weights must be nonnegative and sum to 1")]
    InvalidWeights,
    #[error("no expected values for this cell")]
    NoExpectedValues,
    #[error("value {value} of measure {measure} has no label")]
    UnlabeledValue { measure: String, value: f64 },
    #[error("loose label surprise needs an ordered label domain")]
    NominalLooseUnsupported,
    #[error("unknown label {0}")]
    UnknownLabel(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

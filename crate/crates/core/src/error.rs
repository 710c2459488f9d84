use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command-line driver to pick an exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed file: {0}")]
    Parse(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("empty matrix ({rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("duplicate sensor index {0}")]
    DuplicateIndex(usize),
    #[error("sensor index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rank specification infeasible: {0}")]
    RankInfeasible(String),
    #[error("snapshots are degenerate after mean subtraction")]
    DegenerateAfterCentering,
    #[error("degenerate basis: mode {0} is identically zero")]
    DegenerateBasis(usize),
    #[error("interpolation system singular at DEIM step {step}")]
    DegenerateInterpolant { step: usize },
    #[error("measurement matrix is singular for an interpolating (p = r) selection")]
    SingularInterpolant,
    #[error("matrix is singular")]
    Singular,
    #[error("column {0} is identically zero")]
    ZeroColumn(usize),
    #[error("combinatorial guard exceeded: C({n},{p}) > {limit}")]
    CombinatorialGuard { n: usize, p: usize, limit: u64 },
    #[error("operation refused: {0}")]
    Refused(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Self::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    /// Variant name, for diagnostics.
    pub fn name(&self) -> &'static str {
        use Error::*;
        match self {
            Io { .. } => "Io",
            MalformedHeader(_) => "MalformedHeader",
            Parse(_) => "Parse",
            NonFiniteValue { .. } => "NonFiniteValue",
            EmptyMatrix { .. } => "EmptyMatrix",
            DuplicateIndex(_) => "DuplicateIndex",
            IndexOutOfRange { .. } => "IndexOutOfRange",
            DimensionMismatch(_) => "DimensionMismatch",
            InvalidArgument(_) => "InvalidArgument",
            RankInfeasible(_) => "RankInfeasible",
            DegenerateAfterCentering => "DegenerateAfterCentering",
            DegenerateBasis(_) => "DegenerateBasis",
            DegenerateInterpolant { .. } => "DegenerateInterpolant",
            SingularInterpolant => "SingularInterpolant",
            Singular => "Singular",
            ZeroColumn(_) => "ZeroColumn",
            CombinatorialGuard { .. } => "CombinatorialGuard",
            Refused(_) => "Refused",
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Io { .. } => ErrorClass::Io,
            MalformedHeader(_) | Parse(_) | NonFiniteValue { .. } | EmptyMatrix { .. }
            | DuplicateIndex(_) | IndexOutOfRange { .. } | DimensionMismatch(_)
            | InvalidArgument(_) | RankInfeasible(_) | CombinatorialGuard { .. }
            | Refused(_) => ErrorClass::Validation,
            DegenerateAfterCentering | DegenerateBasis(_) | DegenerateInterpolant { .. }
            | SingularInterpolant | Singular | ZeroColumn(_) => ErrorClass::Numerical,
        }
    }
}

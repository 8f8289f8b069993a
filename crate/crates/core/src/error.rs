use thiserror::Error;

/// Every failure the engine reports.
///
/// Variants fall into three classes that the CLI maps onto exit codes:
/// parse failures, domain failures and resource-bound failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("game has no rows")]
    EmptyGame,
    #[error("total measure of the game is zero")]
    ZeroTotalMeasure,
    #[error("coefficient magnitude must be strictly positive, got {0}")]
    NonpositiveMagnitude(String),
    #[error("scaling factor must be strictly positive, got {0}")]
    NonpositiveFactor(String),
    #[error("exponent p must be a rational >= 1 or max, got {0}")]
    InvalidExponent(String),
    #[error("operation requires a finite exponent p, game uses the max rule")]
    MaxNormUnsupported,
    #[error("operation requires the max rule")]
    NotMaxMode,
    #[error("all coefficients are already equal; nothing to obstruct")]
    SymmetricInput,

    #[error("fine-graining constraint violated: parts sum to {parts}, row holds {row}")]
    ConstraintViolated { row: String, parts: String },
    #[error("row index {index} out of range for a game with {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("fine-graining needs at least one nonzero part")]
    EmptySplit,
    #[error("integer multiplicity required, got {0}")]
    NonIntegerMultiplicity(String),

    #[error("operation requires Kent's universe")]
    WrongUniverse,
    #[error("invalid outcome sequence: {0}")]
    InvalidSequence(String),
    #[error("branch spec needs at least one positive trial measure")]
    ZeroTotal,
    #[error("negative multiplicity {0}")]
    NegativeMultiplicity(String),
    #[error("repetition count N must be at least 1")]
    ZeroRepetitions,
    #[error("outcome index {index} out of range for {len} outcomes")]
    OutcomeOutOfRange { index: usize, len: usize },
    #[error("epsilon must be strictly positive, got {0}")]
    NonpositiveEpsilon(String),
    #[error("universe mismatch: {0}")]
    UniverseMismatch(String),
    #[error("dutch book construction needs c1 == c2, got {0} and {1}")]
    AsymmetricInput(String, String),

    #[error("vectors overlap on index {0}")]
    OverlappingSupport(usize),
    #[error("norm is degenerate: ||(1,1)|| = 1, no exponent can be recovered")]
    DegenerateNorm,
    #[error("unknown norm {0:?}")]
    UnknownNorm(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration of {requested} sequences exceeds the bound {bound}")]
    EnumerationTooLarge { requested: String, bound: u64 },
    #[error("symmetrized game needs {requested} rows, bound is {bound}")]
    SizeOverflow { requested: String, bound: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Domain,
    Resource,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) => ErrorClass::Parse,
            Error::EnumerationTooLarge { .. } | Error::SizeOverflow { .. } => ErrorClass::Resource,
            _ => ErrorClass::Domain,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

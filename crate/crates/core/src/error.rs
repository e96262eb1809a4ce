use thiserror::Error;

/// Errors raised by the analysis core.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero total: {0}")]
    ZeroTotal(String),
    #[error("positive count {positive} exceeds total {total}")]
    PositiveExceedsTotal { total: u64, positive: u64 },
    #[error("empty input")]
    EmptyInput,
    #[error("count overflow while aggregating")]
    Overflow,
    #[error("a comparison needs at least one stratum")]
    NoStrata,
    #[error("duplicate stratum label `{0}`")]
    DuplicateStratum(String),
    #[error("group labels must be distinct, both are `{0}`")]
    SameGroupLabels(String),
    #[error("stratum `{0}` has no subjects in either group")]
    EmptyStratum(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{column}` is not {expected}")]
    WrongColumnType {
        column: String,
        expected: &'static str,
    },
    #[error("column `{column}` has {found} values, expected {expected}")]
    ColumnLength {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{column}` row {row}: non-finite value")]
    NonFinite { column: String, row: usize },
    #[error("expected exactly two groups in `{column}`, found {found}: {values:?}")]
    NotTwoGroups {
        column: String,
        found: usize,
        values: Vec<String>,
    },
    #[error("stratum `{0}` has an empty group side")]
    EmptyStratumSide(String),
    #[error("no candidate covariates given")]
    EmptyCandidates,
    #[error("bin count must be at least 2, got {0}")]
    InvalidBinCount(usize),
    #[error("need at least {needed} distinct values, found {found}")]
    TooFewDistinctValues { needed: usize, found: usize },
    #[error("weights do not match strata: {0}")]
    WeightMismatch(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{0} correlation is undefined (zero variance)")]
    UndefinedCorrelation(&'static str),
    #[error("all diagram points coincide")]
    DegenerateRange,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no reversal generated within {budget} attempts")]
    GenerationFailed { budget: u64 },
    #[error("no full reversal exists with at most {max_total} subjects")]
    NotFound { max_total: u64 },
}

impl Error {
    /// Short machine-readable identifier for this error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ZeroTotal(_) => "zero_total",
            Error::PositiveExceedsTotal { .. } => "positive_exceeds_total",
            Error::EmptyInput => "empty_input",
            Error::Overflow => "overflow",
            Error::NoStrata => "no_strata",
            Error::DuplicateStratum(_) => "duplicate_stratum",
            Error::SameGroupLabels(_) => "same_group_labels",
            Error::EmptyStratum(_) => "empty_stratum",
            Error::UnknownColumn(_) => "unknown_column",
            Error::WrongColumnType { .. } => "wrong_column_type",
            Error::ColumnLength { .. } => "column_length",
            Error::DuplicateColumn(_) => "duplicate_column",
            Error::NonFinite { .. } => "non_finite",
            Error::NotTwoGroups { .. } => "not_two_groups",
            Error::EmptyStratumSide(_) => "empty_stratum_side",
            Error::EmptyCandidates => "empty_candidates",
            Error::InvalidBinCount(_) => "invalid_bin_count",
            Error::TooFewDistinctValues { .. } => "too_few_distinct_values",
            Error::WeightMismatch(_) => "weight_mismatch",
            Error::InvalidWeights(_) => "invalid_weights",
            Error::InsufficientData(_) => "insufficient_data",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::DegenerateRange => "degenerate_range",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::GenerationFailed { .. } => "generation_failed",
            Error::NotFound { .. } => "not_found",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

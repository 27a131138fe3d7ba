use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad family an [`Error`] belongs to. Front ends map these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad parameters supplied by the caller.
    Config,
    /// A well-formed request that hit a singular or degenerate numerical case.
    Numerical,
    /// Malformed, missing or inconsistent input data.
    Data,
    /// Filesystem failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance matrix is not symmetric (|Ω[{row},{col}] - Ω[{col},{row}]| = {gap:e})")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("covariance matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("degenerate universe: {0}")]
    DegenerateUniverse(String),

    #[error("ESG scores lie in the span of the unit vector and expected returns; the mandate system is singular")]
    SingularEsgDirection,

    #[error("no feasible portfolio: {0}")]
    Infeasible(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("panel is empty")]
    EmptyPanel,

    #[error("no ESG score available in month {0}")]
    NoScoresInMonth(String),

    #[error("every portfolio group was excluded")]
    EmptyGroup,

    #[error("sample covariance is singular: {0}")]
    SingularCovariance(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("insufficient history: need at least {needed} observations, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("regression design matrix is rank deficient (column {column})")]
    RankDeficientDesign { column: String },

    #[error("fits were estimated on different samples: {0}")]
    MismatchedSamples(String),

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) => ErrorClass::Config,
            Error::NotSymmetric { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::DegenerateUniverse(_)
            | Error::SingularEsgDirection
            | Error::Infeasible(_)
            | Error::ZeroVariance(_)
            | Error::SingularCovariance(_)
            | Error::DegenerateSeries(_)
            | Error::RankDeficientDesign { .. } => ErrorClass::Numerical,
            Error::DimensionMismatch(_)
            | Error::EmptyPanel
            | Error::NoScoresInMonth(_)
            | Error::EmptyGroup
            | Error::InsufficientHistory { .. }
            | Error::MismatchedSamples(_)
            | Error::Parse { .. }
            | Error::Csv(_)
            | Error::Json(_) => ErrorClass::Data,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    /// Short stable identifier, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::DegenerateUniverse(_) => "degenerate_universe",
            Error::SingularEsgDirection => "singular_esg_direction",
            Error::Infeasible(_) => "infeasible",
            Error::ZeroVariance(_) => "zero_variance",
            Error::InvalidInput(_) => "invalid_input",
            Error::EmptyPanel => "empty_panel",
            Error::NoScoresInMonth(_) => "no_scores_in_month",
            Error::EmptyGroup => "empty_group",
            Error::SingularCovariance(_) => "singular_covariance",
            Error::DegenerateSeries(_) => "degenerate_series",
            Error::InsufficientHistory { .. } => "insufficient_history",
            Error::RankDeficientDesign { .. } => "rank_deficient_design",
            Error::MismatchedSamples(_) => "mismatched_samples",
            Error::Parse { .. } => "parse",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

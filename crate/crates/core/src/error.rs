use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Which treatment arm a message refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Control,
    Treatment,
}

impl core::fmt::Display for Arm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Arm::Control => f.write_str("control"),
            Arm::Treatment => f.write_str("treatment"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("row {row}: unknown outcome label `{label}`")]
    UnknownOutcomeLabel { row: usize, label: String },
    #[error("invalid cohort: {0}")]
    InvalidCohort(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("column layout does not match the layout the model was trained on")]
    LayoutMismatch,
    #[error("empty {0} arm")]
    EmptyArm(Arm),
    #[error("too few rows: need at least {needed}, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("feature importances are undefined for a model without splits")]
    NoSplits,
    #[error("design matrix is rank deficient: column `{column}` is linearly dependent on earlier columns")]
    RankDeficient { column: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Schema(_) | Error::InvalidParameter(_) | Error::UnknownVariable(_) => {
                ErrorKind::Config
            }
            Error::UnknownOutcomeLabel { .. }
            | Error::InvalidCohort(_)
            | Error::DimensionMismatch { .. }
            | Error::LayoutMismatch
            | Error::EmptyArm(_)
            | Error::TooFewRows { .. } => ErrorKind::Data,
            Error::NoSplits | Error::RankDeficient { .. } | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
        }
    }
}

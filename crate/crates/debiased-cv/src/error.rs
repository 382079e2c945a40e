use thiserror::Error;

/// Errors produced while validating inputs or running the estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("error matrix must have at least 2 rows and 1 column, got {n}x{m}")]
    MatrixTooSmall { n: usize, m: usize },

    #[error("non-finite loss at row {row}, column {column}")]
    NonFinite { row: usize, column: String },

    #[error("fold count must be at least 2, got {k}")]
    FoldCountTooSmall { k: usize },

    #[error("{n} rows cannot be split into {k} equal-size folds")]
    UnevenFolds { n: usize, k: usize },

    #[error("fold labels must cover 1..={k} with equal counts; {detail}")]
    BadFoldLabels { k: usize, detail: String },

    #[error("partition covers {partition_rows} rows but the matrix has {matrix_rows}")]
    PartitionMismatch {
        partition_rows: usize,
        matrix_rows: usize,
    },

    #[error(
        "covariance matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} \
         is below tolerance {tolerance:.6e}"
    )]
    NotPositiveSemidefinite { eigenvalue: f64, tolerance: f64 },

    #[error("covariance matrix must be symmetric {m}x{m}; {detail}")]
    BadCovariance { m: usize, detail: String },

    #[error("invalid noise configuration: {0}")]
    BadNoiseConfig(String),

    #[error("bootstrap needs at least 2 replicates, got {b}")]
    TooFewReplicates { b: usize },

    #[error("confidence level must be in (0, 1), got {level}")]
    BadLevel { level: f64 },

    #[error("csv error at line {line}: {msg}")]
    CsvFormat { line: usize, msg: String },

    #[error("csv header row is missing or empty")]
    MissingHeader,

    #[error("{0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed user input (bad files, bad
    /// dimensions) rather than internal failures. The CLI maps these to
    /// exit code 2.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

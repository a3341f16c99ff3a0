use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by training, membership assignment and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not line up.
    Shape {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// A class required for the operation has no samples.
    DegenerateDataset(&'static str),
    /// A class has fewer samples than the requested number of folds.
    Stratification {
        label: i8,
        count: usize,
        folds: usize,
    },
    /// Cholesky factorization broke down at the given (1-based) leading minor.
    NotPositiveDefinite { minor: usize },
    /// A matrix expected to be symmetric is not (max absolute asymmetry given).
    NotSymmetric { asymmetry: f64 },
    /// A solve finished but its residual exceeds the accepted bound.
    IllConditioned { relative_residual: f64 },
    /// A hyperparameter is outside its valid range.
    InvalidParameter { name: &'static str, value: f64 },
    /// A fuzzy weight is negative or not finite.
    InvalidWeight { index: usize, value: f64 },
    /// A feature value is NaN or infinite.
    NonFinite { row: usize, col: usize },
    /// A metric is undefined for the given input.
    UndefinedMetric(&'static str),
    /// An input list that must be non-empty was empty.
    Empty(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape {
                context,
                expected,
                found,
            } => write!(f, "{context}: expected {expected}, found {found}"),
            Error::DegenerateDataset(why) => write!(f, "degenerate dataset: {why}"),
            Error::Stratification {
                label,
                count,
                folds,
            } => write!(
                f,
                "class {label:+} has {count} samples, fewer than the {folds} folds requested"
            ),
            Error::NotPositiveDefinite { minor } => {
                write!(f, "matrix is not positive definite (leading minor {minor})")
            }
            Error::NotSymmetric { asymmetry } => {
                write!(f, "matrix is not symmetric (max asymmetry {asymmetry:e})")
            }
            Error::IllConditioned { relative_residual } => write!(
                f,
                "system too ill-conditioned: relative residual {relative_residual:e}"
            ),
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid value {value} for parameter `{name}`")
            }
            Error::InvalidWeight { index, value } => {
                write!(f, "fuzzy weight {index} is {value}; weights must be finite and >= 0")
            }
            Error::NonFinite { row, col } => {
                write!(f, "non-finite feature value at row {row}, column {col}")
            }
            Error::UndefinedMetric(why) => write!(f, "metric undefined: {why}"),
            Error::Empty(what) => write!(f, "{what} must not be empty"),
        }
    }
}

impl core::error::Error for Error {}

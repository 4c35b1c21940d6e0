use core::fmt;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the numerics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A field does not have the grid's length.
    LengthMismatch { expected: usize, found: usize },
    /// The operation is not defined in the grid's mode.
    WrongMode { op: &'static str },
    /// A depth sample is zero, negative or not finite.
    NonPositiveDepth { index: usize, value: f64 },
    /// Measured energy is at or above the threshold where the a-priori
    /// bounds stop holding.
    ThresholdExceeded { energy: f64, threshold: f64 },
    /// A linear solve left a residual above tolerance.
    SolverFailure { residual: f64 },
    /// A wave reached the edge of a line-mode domain.
    BoundaryContamination { t: f64, deviation: f64 },
    /// The depth went nonpositive even after halving the step.
    DepthCollapse { t: f64 },
    /// A parameter is outside its admissible range.
    InvalidParameter(&'static str),
    /// A requested window is not covered by the stored history.
    OutOfRange(&'static str),
    /// A NaN or infinity appeared.
    NonFinite(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::LengthMismatch { expected, found } => {
                write!(f, "field has {found} samples, grid has {expected}")
            }
            Error::WrongMode { op } => write!(f, "{op} is not available in this grid mode"),
            Error::NonPositiveDepth { index, value } => {
                write!(f, "depth {value} at cell {index} is not positive")
            }
            Error::ThresholdExceeded { energy, threshold } => {
                write!(f, "energy {energy} is not below the threshold {threshold}")
            }
            Error::SolverFailure { residual } => {
                write!(f, "linear solve residual {residual:e} above tolerance")
            }
            Error::BoundaryContamination { t, deviation } => {
                write!(f, "boundary contamination at t={t}: far-field deviation {deviation:e}")
            }
            Error::DepthCollapse { t } => write!(f, "depth collapse at t={t}"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::OutOfRange(what) => write!(f, "out of range: {what}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
        }
    }
}

impl core::error::Error for Error {}

use std::fmt;

/// Errors produced by fitting, sampling and evaluation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a precondition (non-finite value, dimension
    /// mismatch, empty range, ...).
    InvalidArgument(String),
    /// A variance collapsed below the numerical floor where the likelihood
    /// is no longer meaningful.
    DegenerateVariance { sigma2: f64 },
    /// The weighted normal equations are rank deficient.
    SingularDesign,
    /// Initialization could not produce a usable starting point.
    InitFailure(String),
    /// A grid point received zero kernel mass in the local M-step.
    IsolatedGridPoint { index: usize },
    /// A query point has zero kernel mass under a compactly supported kernel.
    NoSupport,
    /// The sine and cosine smoothers cancelled exactly; the circular mean
    /// direction is undefined at this point.
    DegenerateDirection,
    /// An operation was called on a model in an unusable state.
    InvalidState(String),
    /// A numeric input is outside the range the implementation supports.
    OutOfRange(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DegenerateVariance { sigma2 } => {
                write!(f, "degenerate variance: sigma2 = {sigma2} is below 1e-12")
            }
            Error::SingularDesign => {
                write!(f, "singular design: weighted normal equations are rank deficient")
            }
            Error::InitFailure(msg) => write!(f, "initialization failed: {msg}"),
            Error::IsolatedGridPoint { index } => {
                write!(f, "grid point {index} has zero kernel mass; increase the bandwidth")
            }
            Error::NoSupport => {
                write!(f, "no kernel mass at the query point; increase the bandwidth")
            }
            Error::DegenerateDirection => {
                write!(f, "sin/cos components cancel; circular mean direction is undefined")
            }
            Error::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            Error::OutOfRange(msg) => write!(f, "out of range: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared by all laboratory modules.

use thiserror::Error;

/// Failure classes of the numerical laboratory.
///
/// `Vacuum`, `Numerics` and `Precondition` are kept distinct because callers
/// react differently to them: a vacuum crossing is a legitimate physical
/// outcome of bad data, a NaN is a bug or an uncontrolled instability, and a
/// precondition failure means the requested analysis does not apply.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The depth reached or crossed the vacuum boundary h = 0.
    #[error("vacuum: {0}")]
    Vacuum(String),

    /// A documented caller obligation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A computation produced a NaN or infinity.
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// Neither blow-up criterion applies to the supplied data.
    #[error("no prediction: {0}")]
    NoPrediction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

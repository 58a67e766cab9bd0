//! Error taxonomy for the heralding library.
//!
//! Errors are grouped by what the caller can do about them:
//!
//! * [`Error::Validation`] — the input is malformed or unphysical
//!   (non-Hermitian covariance, uncertainty violation, non-unitary
//!   interferometer, inconsistent document fields).  Fix the input.
//! * [`Error::Unsupported`] — the request is well-formed but outside the
//!   library's contract (e.g. Fock coefficients of a mixed heralded state,
//!   which has no state-vector expansion).  Change the request.
//! * [`Error::NumericalHealth`] — an internal consistency residue exceeded
//!   its tolerance (imaginary parts that must vanish, rank conditions,
//!   convergence checks).  The computation is not trustworthy; the message
//!   carries the offending residue.
//! * [`Error::Resource`] — a hard cap was hit (derivative order, grid size).
//! * [`Error::Infeasible`] — an optimization run could not satisfy its
//!   constraints to tolerance.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unphysical input.
    #[error("validation: {0}")]
    Validation(String),

    /// Well-formed request outside the library's contract.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An internal consistency check failed; results would be untrustworthy.
    #[error("numerical health: {0}")]
    NumericalHealth(String),

    /// A hard resource cap (derivative order, grid memory) was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Constrained optimization failed to reach feasibility.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Filesystem failure while reading or writing documents.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Document parse failure.
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for command-line front ends.
    ///
    /// `2` — validation / parse / unsupported-request failures,
    /// `3` — numerical-health and resource failures,
    /// `4` — infeasible optimization.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Unsupported(_) | Error::Io(_) | Error::Parse(_) => 2,
            Error::NumericalHealth(_) | Error::Resource(_) => 3,
            Error::Infeasible(_) => 4,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

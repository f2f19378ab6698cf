use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-domain input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request exceeds what exact enumeration can handle.
    #[error("{what} requires n <= {limit}, got {got}")]
    Capability {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    /// |M| is too close to 1 for artanh(M) to be finite.
    #[error("degenerate magnetization: |M| = {magnetization} (all spins unanimous)")]
    DegenerateMagnetization { magnetization: f64 },

    /// Both Phi(M) and phi2(M) vanish, leaving gamma undetermined.
    #[error("degenerate objective: Phi(M) = {phi}, phi2(M) = {phi2}")]
    DegenerateObjective { phi: f64, phi2: f64 },

    /// Root finding or iterative fitting failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

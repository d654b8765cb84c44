use std::path::PathBuf;

use crate::solver::SolveStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the set on which the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data does not carry what the operation needs (e.g. a jet without
    /// fourth derivatives).
    #[error("capability error: {0}")]
    Capability(String),

    /// A manufactured solution whose Hessian leaves the admissible cone.
    #[error("Hessian leaves the admissible cone at {point:?} (margin {margin:.3e})")]
    ConeViolation { point: [f64; 3], margin: f64 },

    /// Every damping level of a Newton step left the admissible cone.
    #[error("Newton step leaves the admissible cone at node {node:?} for every damping level (margin {margin:.3e})")]
    ConeExit { node: [usize; 3], margin: f64 },

    #[error("Newton iteration did not converge after {} iterations (last residual {:.3e})",
        .stats.iterations, .stats.residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { stats: Box<SolveStats> },

    #[error("linear solver failure: {0}")]
    LinearSolveFailure(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed grid file: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

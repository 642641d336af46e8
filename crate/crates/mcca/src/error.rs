//! Error types shared across the crate.

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by problem construction, solvers, and I/O.
///
/// The two solver-side failure modes ([`Error::NotConverged`],
/// [`Error::ZeroBlock`], [`Error::AssumptionViolated`],
/// [`Error::InconsistentCertificate`]) are kept distinct from input
/// validation errors so that callers (notably the CLI) can map them to
/// different exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatches, out-of-range parameters,
    /// unparsable files.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Structurally valid input on which the requested quantity is not
    /// defined, e.g. a zero-variance block or too few observations.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A diagonal covariance block failed its Cholesky factorization.
    #[error("block {block} is not positive definite")]
    NotPositiveDefinite {
        /// Zero-based index of the offending block or view.
        block: usize,
    },

    /// A matrix expected to be symmetric exceeded the asymmetry tolerance.
    #[error("matrix is asymmetric: relative asymmetry {relative:.3e} exceeds {tolerance:.3e}")]
    Asymmetric {
        /// Measured relative asymmetry `max|A - A^T| / max|A|`.
        relative: f64,
        /// Tolerance the measurement was compared against.
        tolerance: f64,
    },

    /// A block iterate collapsed to (numerical) zero and cannot be
    /// normalized.
    #[error("block {block} collapsed to zero norm{}", iteration.map(|k| format!(" at iteration {k}")).unwrap_or_default())]
    ZeroBlock {
        /// Zero-based index of the collapsed block.
        block: usize,
        /// Iteration at which the collapse occurred, when known.
        iteration: Option<usize>,
    },

    /// An iterative solver hit its iteration cap before meeting tolerance.
    #[error("solver did not converge within {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        /// Number of iterations performed.
        iterations: usize,
        /// Residual at the final iterate.
        residual: f64,
    },

    /// The leading-eigenvector extraction assumption failed: a block of the
    /// eigenvector has numerically zero norm, so the candidate direction is
    /// undefined on that block.
    #[error("extraction assumption violated: block {block} of the leading eigenvector has norm {norm:.3e}")]
    AssumptionViolated {
        /// Zero-based index of the degenerate block.
        block: usize,
        /// Norm of that block.
        norm: f64,
    },

    /// Certificate quantities are mutually inconsistent beyond what the
    /// reported solver residual can explain.
    #[error("inconsistent certificate: {0}")]
    InconsistentCertificate(String),

    /// A failure inside the deflation loop, tagged with the canonical set
    /// being computed when it occurred.
    #[error("while computing canonical set {set}: {source}")]
    InSet {
        /// Zero-based index of the canonical set.
        set: usize,
        /// The underlying failure.
        #[source]
        source: Box<Error>,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of an otherwise well-posed solve (as opposed to
    /// invalid or degenerate input). The CLI maps these to exit code 3.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::ZeroBlock { .. }
            | Error::NotConverged { .. }
            | Error::AssumptionViolated { .. }
            | Error::InconsistentCertificate(_) => true,
            Error::InSet { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

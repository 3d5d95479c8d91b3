use thiserror::Error;

/// Errors produced by model validation and the solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A field violates its documented bound.
    #[error("invalid {field}: {message}")]
    InvalidParameter {
        field: &'static str,
        message: String,
    },

    /// Vector lengths that must agree do not.
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A computed quantity overflowed or is NaN.
    #[error("non-finite value for user {user}: {context}")]
    NonFinite { user: usize, context: &'static str },

    /// Input outside the domain of a scalar equation.
    #[error("domain error in {op}: {message}")]
    Domain { op: &'static str, message: String },

    /// An iterative procedure ran out of iterations. For the scalar root
    /// finders `detail` carries the last bracket.
    #[error("{op} did not converge within {iters} iterations ({detail})")]
    IterationLimit {
        op: &'static str,
        iters: usize,
        detail: String,
    },

    /// The instance admits no meaningful optimization (e.g. every effective
    /// SNR is zero).
    #[error("degenerate instance: {message}")]
    Degenerate { message: String },

    /// The ellipsoid search hit its iteration cap with neither a feasibility
    /// nor an infeasibility certificate; `best_dual` is the largest dual
    /// value seen.
    #[error(
        "feasibility check indeterminate after {iters} iterations (best dual value {best_dual})"
    )]
    Indeterminate { iters: usize, best_dual: f64 },

    /// The caller-supplied bisection ceiling was not actually an upper bound.
    #[error("r_max_init {given} is not above the optimum; restart with a larger initialization")]
    RMaxTooSmall { given: f64 },

    /// A point where a formula needs the interior of the simplex.
    #[error("boundary point: {message}")]
    Boundary { message: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}

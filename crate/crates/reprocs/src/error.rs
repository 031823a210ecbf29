use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix argument was expected to be symmetric within tolerance.
    #[error("not Hermitian: max asymmetry {0:.3e} exceeds tolerance")]
    NotHermitian(f64),

    /// Dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Exact denseness enumeration would exceed the subset cap.
    #[error(
        "exact enumeration needs {subsets} subsets, above the cap of {cap}; \
         use the loose mode instead"
    )]
    EnumerationCap { subsets: u128, cap: u128 },

    /// Projected data carried no energy in the top eigenvalues.
    #[error("no energy in projected data (top eigenvalue {0:.3e})")]
    DegenerateProjection(f64),

    /// The least-squares Gram matrix on the estimated support is too
    /// ill-conditioned to invert reliably.
    #[error("ill-conditioned support: Gram condition number {0:.3e} exceeds 1e12")]
    IllConditionedSupport(f64),

    /// An iterative solver ran out of iterations without a feasible iterate.
    #[error("solver did not converge within {0} iterations")]
    SolverDiverged(usize),

    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A guarantee-quantity computation left its valid domain.
    #[error("bound evaluation failed: {0}")]
    BoundDomain(String),

    /// I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON input.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

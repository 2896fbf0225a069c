use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric: max |m[i][j] - m[j][i]| = {max_asymmetry:e} exceeds 1e-12")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("not a correlation matrix: {0}")]
    NotCorrelation(String),

    #[error("matrix is not positive definite: minimal eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error(
        "correlation matrix is near-singular: minimal eigenvalue {lambda:e} < 1e-12; \
         blend it towards the identity or drop a redundant coordinate"
    )]
    NearSingular { lambda: f64 },

    #[error("symmetric eigendecomposition did not converge for {rows}x{cols} matrix {matrix}")]
    EigenNoConvergence {
        rows: usize,
        cols: usize,
        matrix: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "inadmissible shape alpha = {alpha} for dimension n = {n}: \
         requires 2α ∈ ℕ or 2α > n−2 (2α = {two_alpha})"
    )]
    Admissibility { alpha: f64, n: usize, two_alpha: f64 },

    #[error("series truncation failed after {terms} terms; achieved bound {bound:e}")]
    Truncation { terms: usize, bound: f64 },

    #[error("dimension {n} exceeds the subset enumeration limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {what}: {message}")]
    Parse { what: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

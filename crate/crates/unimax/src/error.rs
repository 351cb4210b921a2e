use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero vector: Euclidean norm {norm:e} is below the degeneracy threshold")]
    ZeroVector { norm: f64 },

    #[error("invalid sphere sample count {count}: must be even and at least 4")]
    InvalidCount { count: usize },

    #[error("invalid dimension {n}: must be at least 2")]
    InvalidDimension { n: usize },

    #[error("resolution {resolution} too small: need at least {min}")]
    ResolutionTooSmall { resolution: usize, min: usize },

    #[error("invalid truncation: need 1 <= k <= N <= 64, got k={k}, N={n_trunc}")]
    InvalidTruncation { k: usize, n_trunc: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero combination: all coefficients are (numerically) zero")]
    ZeroCombination,

    #[error(
        "generators are linearly dependent on the sampled domain \
         (singular value ratio {ratio:e} below threshold {threshold:e})"
    )]
    DegenerateFamily { ratio: f64, threshold: f64 },

    #[error("grid too coarse for n={n}: need 1/n >= 2 * grid step ({step:e})")]
    ResolutionTooCoarse { n: usize, step: f64 },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("svg plots are only supported for 1-parameter domains (got parameter dimension {dim})")]
    UnsupportedPlot { dim: usize },

    #[error("csv format error: {0}")]
    CsvFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

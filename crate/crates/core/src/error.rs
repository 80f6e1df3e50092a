use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),

    /// Cholesky factorization hit a non-positive pivot after ridge regularization.
    #[error("ill-conditioned {what}: smallest pivot {pivot:e} at index {index}")]
    Conditioning {
        what: String,
        pivot: f64,
        index: usize,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "Kronecker pencil of dimension {dim} exceeds the configured cap of {cap}; \
         use smaller desk-scale antenna/RF-chain counts"
    )]
    Size { dim: usize, cap: usize },

    #[error("multiplier bracket not found for node {node} after {doublings} doublings")]
    Divergence { node: usize, doublings: usize },

    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable tag used in the `status` column of result files.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension_error",
            Error::NotHermitian(_) => "hermitian_error",
            Error::Conditioning { .. } => "conditioning_error",
            Error::Geometry(_) => "geometry_error",
            Error::Parameter(_) => "parameter_error",
            Error::Size { .. } => "size_error",
            Error::Divergence { .. } => "divergence_error",
            Error::Validation(_) => "validation_error",
            Error::Parse(_) => "parse_error",
            Error::Io(_) => "io_error",
            Error::Csv(_) => "csv_error",
            Error::AtIteration { source, .. } => source.kind(),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }
}

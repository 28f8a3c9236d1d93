use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node ({i}, {j}) outside grid {ni}x{nj}")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        ni: usize,
        nj: usize,
    },

    #[error("invalid field at ({x}, {y}): {reason}")]
    InvalidField { x: f64, y: f64, reason: String },

    /// A traced field line left the strip through the top or bottom edge.
    #[error("field line through row {k} exits the domain at ({x}, {y}) before reaching x = 0")]
    UnsupportedGeometry { k: usize, x: f64, y: f64 },

    #[error("field nearly vertical at ({x}, {y}): cos(theta) = {cos_theta:e}")]
    NearVerticalField { x: f64, y: f64, cos_theta: f64 },

    #[error("matrix is singular or numerically singular: {0}")]
    Singular(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("observed order needs positive errors, got {coarse} and {fine}")]
    NonPositiveError { coarse: f64, fine: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidField { .. }
            | Error::IndexOutOfRange { .. }
            | Error::ShapeMismatch { .. }
            | Error::NonPositiveError { .. } => 2,
            Error::Singular(_) | Error::NonFinite(_) => 3,
            Error::UnsupportedGeometry { .. } | Error::NearVerticalField { .. } => 4,
            Error::Io(_) | Error::Csv(_) => 2,
        }
    }

    /// Short tag used in sweep CSV rows that failed.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InvalidField { .. } => "invalid_field",
            Error::UnsupportedGeometry { .. } => "unsupported_geometry",
            Error::NearVerticalField { .. } => "near_vertical_field",
            Error::Singular(_) => "singular",
            Error::NonFinite(_) => "non_finite",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NonPositiveError { .. } => "nonpositive_error",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at offset {offset}: expected {}, found {found}", expected.join(" | "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid {nlat}x{nlon} too coarse for lmax = {lmax}")]
    GridTooCoarse { lmax: usize, nlat: usize, nlon: usize },

    #[error("chart singularity at {0:?}")]
    ChartSingularity(Vec<f64>),

    #[error("immersion does not lie in the light cone: {0}")]
    NotLightCone(String),

    #[error("immersion is not compact: {0}")]
    NotCompact(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

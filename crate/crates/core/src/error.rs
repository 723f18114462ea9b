use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cell ({col}, {row}) is outside the {width}x{height} map")]
    OutOfBounds {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("path is not traversable at cell ({col}, {row})")]
    Infeasible { col: usize, row: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("scene generation failed: {0}")]
    Generation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

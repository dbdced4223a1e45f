use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, shapes, or configuration values.
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed or unsupported image file.
    #[error("codec: {0}")]
    Codec(String),
    /// Non-finite values where the pipeline requires finite ones.
    #[error("numeric: {0}")]
    Numeric(String),
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        Error::Codec(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },

    #[error("point {index} lies outside the window")]
    OutsideWindow { index: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("configurations live on different windows; restrict them to a common window first")]
    WindowMismatch,

    #[error("brute force enumeration is limited to {max} points, got {got}")]
    TooLarge { max: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("sample grids differ")]
    GridMismatch,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by a window that cannot support the requested computation.
    pub fn is_window_too_small(&self) -> bool {
        matches!(self, Error::WindowTooSmall(_))
    }
}

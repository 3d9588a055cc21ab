use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gauge: {0}")]
    InvalidGauge(String),
    #[error("gauge gradient undefined at the origin")]
    GradientAtOrigin,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("every boundary piece is a wall")]
    AllWall,
    #[error("cell ({i}, {j}) at ({x:.6}, {y:.6}) is unreachable from the boundary")]
    Unreachable { i: usize, j: usize, x: f64, y: f64 },
    #[error("cell ({i}, {j}) has no projection onto the boundary")]
    EmptyProjection { i: usize, j: usize },
    #[error("parameter t = {t} outside the ray extent ({a}, {b})")]
    OutsideRay { t: f64, a: f64, b: f64 },
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

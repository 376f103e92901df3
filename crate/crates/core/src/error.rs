use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched sizes or grids between fields.
    #[error("structural error: {0}")]
    Structural(String),
    /// A parameter lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A feature is too small to be represented on the grid.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// A hydrodynamic run left its smooth lifespan before the requested time.
    #[error("lifespan error: {0}")]
    Lifespan(String),
    /// A non-finite value appeared during time stepping.
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error("degenerate coupling: {0}")]
    DegenerateCoupling(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

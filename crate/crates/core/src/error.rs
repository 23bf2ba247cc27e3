use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no null vector: smallest pivot {smallest:.3e} is not below {threshold:.3e}")]
    NoNullVector { smallest: f64, threshold: f64 },

    #[error("degenerate dressing: omega_g and omega_r are both zero")]
    DegenerateDressing,

    #[error("degenerate steady manifold of dimension {dim}")]
    DegenerateSteadyManifold { dim: usize },

    #[error("steady-state solve refused: joint dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("tolerance failure at t = {t}: step size {h:.3e} fell below the floor")]
    ToleranceFailure { t: f64, h: f64 },

    #[error("resonant pole: |f(x)| = {magnitude:.3e} at x = {x}")]
    ResonantPole { x: f64, magnitude: f64 },

    #[error("singular resolvent: condition number {condition:.3e}")]
    SingularResolvent { condition: f64 },

    #[error("non-monotone trajectory: <n> rises by {rise:.3e} above its initial value {initial:.3e}")]
    NonMonotone { rise: f64, initial: f64 },

    #[error("feature count mismatch: expected 2 zeros, found {found}")]
    FeatureCountMismatch { found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by user-supplied configuration.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

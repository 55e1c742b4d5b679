use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("incompressible limit: poisson ratio {0} must be < 0.5")]
    IncompressibleLimit(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("particle {index} is outside the grid domain at {position:?}")]
    OutOfBounds { index: usize, position: [f64; 3] },
    #[error("numerical blow-up at particle {index}: det(F) = {det:e}; reduce dt")]
    NumericalBlowup { index: usize, det: f64 },
    #[error("CFL violation: dt * max|v| = {0:e} exceeds dx = {1:e}")]
    Cfl(f64, f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("light touch not achieved within {0} substeps")]
    Initialization(usize),
    #[error("episode is over after {0} steps")]
    EpisodeOver(usize),
    #[error("no surface particles for gel {0}")]
    NoSurface(usize),
    #[error("no object found in image")]
    NoObject,
    #[error("no total internal reflection: n1 = {n1} > n2 = {n2}")]
    NoTotalInternalReflection { n1: f64, n2: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("missing expert velocities for strategy {0}")]
    MissingExpert(String),
    #[error("training diverged at episode {0}")]
    Diverged(usize),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("unsupported checkpoint version or magic: {0}")]
    CheckpointVersion(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("at substep {substep}: {source}")]
    AtSubstep {
        substep: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("image error: {0}")]
    Image(String),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no triples in {0}")]
    NoTriples(PathBuf),
    #[error("unknown entity label {label:?} in {side} graph")]
    UnknownEntity { label: String, side: &'static str },
    #[error("alignment violates 1-to-1: {side} entity {entity} appears twice")]
    NotOneToOne { side: &'static str, entity: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate batch: zero standard deviation in z-score set")]
    DegenerateBatch,
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("k-means left a cluster empty after {0} re-seeding attempts")]
    EmptyCluster(usize),
    #[error("class {0} has no training rows")]
    MissingClass(usize),
    #[error("coordinate ({row}, {col}) written by two batches")]
    Collision { row: usize, col: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("bad file format in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell index {id} out of range (grid has {n} cells)")]
    IndexOutOfRange { id: usize, n: usize },

    #[error("point ({0}, {1}) lies outside the spatial domain")]
    OutsideDomain(f64, f64),

    #[error("parameter ({0}, {1}) lies outside the sampled parameter domain")]
    OutsideParamDomain(f64, f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate flux: the wave-speed bound is zero over the parameter range")]
    DegenerateFlux,

    #[error("cell value missing on the stencil halo (cell {0})")]
    MissingHaloValue(usize),

    #[error("snapshot {index} is not loaded in the store")]
    MissingSnapshot { index: usize },

    #[error("reduced mesh is empty")]
    EmptyReducedMesh,

    #[error("hyper-reduction failure: {0}")]
    HyperReduction(String),

    #[error("reference field has zero norm; relative error is undefined")]
    ZeroReferenceNorm,

    #[error("record time {0} does not land on a computed time step")]
    UnreachableRecordTime(f64),

    #[error("training run for sample {index} failed: {source}")]
    TrainingRun {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid file {path}: {reason}")]
    InvalidFile { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invalid_file(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidFile {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

use std::path::PathBuf;

use odeco_core::mesh::MeshError;
use odeco_core::solver::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum OdecoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {error}")]
    Mesh { path: PathBuf, error: MeshError },
    #[error("solver: {0}")]
    Solver(SolverError),
    #[error("configuration: {0}")]
    Config(String),
}

impl OdecoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OdecoError::Io { path: path.into(), source }
    }
}

impl From<SolverError> for OdecoError {
    fn from(e: SolverError) -> Self {
        OdecoError::Solver(e)
    }
}

use congest_core::graph::GraphError;
use congest_core::spanner::SpannerError;
use congest_core::verify::VerifyError;
use congest_core::wbfs::WbfsError;
use thiserror::Error;

/// Failures that make a run meaningless; all map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Wbfs(#[from] WbfsError),
    #[error(transparent)]
    Spanner(#[from] SpannerError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_string(),
            source,
        }
    }
}

use std::path::PathBuf;

use livedata::catalogue::CatalogueError;
use livedata::node::NodeError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error(transparent)]
    Catalogue(#[from] CatalogueError),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Server(std::io::Error),
    #[error("{0} integrity issue(s) found")]
    Integrity(usize),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Node(e) => e.code(),
            CliError::Catalogue(e) => e.code(),
            CliError::Read { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Usage(_) => "usage",
            CliError::Server(_) => "server",
            CliError::Integrity(_) => "integrity",
        }
    }

    pub fn exit_code(&self) -> u8 {
        let io = match self {
            CliError::Node(e) => e.is_io(),
            CliError::Catalogue(e) => e.status() >= 500,
            CliError::Read { .. } | CliError::Server(_) => true,
            CliError::Parse { .. } | CliError::Usage(_) | CliError::Integrity(_) => false,
        };
        if io {
            2
        } else {
            1
        }
    }

    /// `error[code]: message` on a single line.
    pub fn line(&self) -> String {
        let message = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {message}", self.code())
    }
}

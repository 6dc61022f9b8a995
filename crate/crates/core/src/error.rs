use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::mixer::MixError;
use crate::templates::TemplateError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {reason}", .path.display())]
    Shard {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure lies in the configuration rather than the data.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Template(_) => true,
            Error::Corpus(e) => matches!(
                e,
                CorpusError::SubsetTooSmall { .. }
                    | CorpusError::SubsetTooLarge { .. }
                    | CorpusError::UnknownHeldIn(_)
            ),
            Error::Mix(e) => matches!(e, MixError::InvalidSpec(_) | MixError::SourceNotPresent(_)),
            Error::Io { .. } | Error::Shard { .. } => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use glocalkd_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}:{line}: attribute row has {found} values, expected {expected}", file.display())]
    RaggedAttributeRow {
        file: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{}:{line}: node {node} has no graph assignment", file.display())]
    NodeWithoutGraphAssignment { file: PathBuf, line: usize, node: usize },
    #[error("{}:{line}: edge ({a}, {b}) joins graphs {ga} and {gb}", file.display())]
    CrossGraphEdge {
        file: PathBuf,
        line: usize,
        a: usize,
        b: usize,
        ga: usize,
        gb: usize,
    },
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub(crate) fn parse(file: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    /// Process exit status: 2 input/parse, 3 config/compatibility, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingFile(_)
            | Error::RaggedAttributeRow { .. }
            | Error::NodeWithoutGraphAssignment { .. }
            | Error::CrossGraphEdge { .. }
            | Error::Parse { .. }
            | Error::Io { .. } => 2,
            Error::Config(_) => 3,
            Error::Core(e) => match e {
                CoreError::NonFiniteGradient { .. } | CoreError::NonFiniteLoss { .. } => 4,
                CoreError::EmptyGraph
                | CoreError::OutOfRangeEndpoint(..)
                | CoreError::SelfLoopRejected(_)
                | CoreError::FeatureShapeMismatch { .. }
                | CoreError::LabelLengthMismatch { .. }
                | CoreError::NoNormalGraph
                | CoreError::FeatureKindMismatch(_) => 2,
                _ => 3,
            },
        }
    }
}

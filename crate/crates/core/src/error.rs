use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SieveError> = std::result::Result<T, E>;

/// Every failure the pipeline can report.
///
/// [`SieveError::is_usage`] separates operator mistakes (bad config, bad
/// parameters, impossible training sets) from runtime failures such as I/O
/// or misaligned sidecars; the CLI maps them onto exit codes 2 and 1.
#[derive(Debug, Error)]
pub enum SieveError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}line {line}: malformed JSON: {message}", fmt_path(.path))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("{}line {line}: {message}", fmt_path(.path))]
    Schema {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("invalid span: {0}")]
    InvalidSpan(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("policy syntax error at position {position}: {message}")]
    PolicySyntax { position: usize, message: String },

    #[error("policy references unknown attributes: {}", .0.join(", "))]
    UnknownAttributes(Vec<String>),

    #[error("{}: line {line}: attribute record id `{found}` does not match document id `{expected}`", .shard.display())]
    Misaligned {
        shard: PathBuf,
        line: usize,
        expected: String,
        found: String,
    },

    #[error("missing attribute sidecar {}", .0.display())]
    MissingSidecar(PathBuf),

    #[error("{}: document `{id}` has no attribute `{name}`", .shard.display())]
    MissingAttribute {
        shard: PathBuf,
        id: String,
        name: String,
    },
}

fn fmt_path(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("{}: ", p.display()),
        None => String::new(),
    }
}

impl SieveError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SieveError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by how the tool was invoked or configured.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            SieveError::Param(_)
                | SieveError::Config(_)
                | SieveError::Training(_)
                | SieveError::PolicySyntax { .. }
                | SieveError::UnknownAttributes(_)
        )
    }

    pub(crate) fn with_path(self, path: &std::path::Path) -> Self {
        match self {
            SieveError::Parse { line, message, .. } => SieveError::Parse {
                path: Some(path.to_path_buf()),
                line,
                message,
            },
            SieveError::Schema { line, message, .. } => SieveError::Schema {
                path: Some(path.to_path_buf()),
                line,
                message,
            },
            other => other,
        }
    }
}

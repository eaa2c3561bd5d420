use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{} is not empty; refusing to initialize", .0.display())]
    AlreadyInitialized(PathBuf),
    #[error("{} is not a workspace (no gqms.toml); run `gqms init` first", .0.display())]
    MissingWorkspace(PathBuf),
    #[error("grid file {} is missing", .0.display())]
    MissingGrid(PathBuf),
    #[error("{what} is missing; {hint}")]
    MissingArtifact { what: &'static str, hint: &'static str },
    #[error("unknown version `{0}`")]
    UnknownVersion(String),
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("invalid snapshot label `{0}` (use letters, digits, `-` and `_`)")]
    InvalidLabel(String),
    #[error("{}: {message}", .path.display())]
    BadConfig { path: PathBuf, message: String },
    #[error("{}: {message}", .path.display())]
    BadData { path: PathBuf, message: String },
    /// Rendered parse diagnostics, one per line.
    #[error("grid does not parse:\n{0}")]
    Syntax(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

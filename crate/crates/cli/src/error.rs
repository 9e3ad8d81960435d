use epp_core::EppError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Epp(#[from] EppError),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration, existence and I/O problems; 1 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Epp(e) if !e.is_validation() => 1,
            _ => 2,
        }
    }
}

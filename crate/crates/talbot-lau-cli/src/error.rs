use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Top-level failure classes, one exit code each.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Exit code 3.
    #[error("data error: {0}")]
    Data(String),
    /// Exit code 4.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<talbot_lau::Error> for CliError {
    fn from(e: talbot_lau::Error) -> Self {
        use talbot_lau::Error as E;
        match e {
            E::Data(m) => CliError::Data(m),
            E::Io(m) => CliError::Data(m.to_string()),
            E::Domain(m) => CliError::Numerical(format!("domain: {m}")),
            E::Degenerate(m) => CliError::Numerical(format!("degenerate: {m}")),
            E::Numerics(m) => CliError::Numerical(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

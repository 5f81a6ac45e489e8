use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Algorithm(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for usage and validation problems, 3 for algorithmic failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Input(_) => 2,
            Self::Algorithm(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<clustersift::Error> for CliError {
    fn from(e: clustersift::Error) -> Self {
        use clustersift::Error as E;
        match e {
            E::ThresholdUnreachable { .. } | E::TooManySubsets { .. } | E::DegenerateData { .. } => {
                Self::Algorithm(e.to_string())
            }
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Input(format!("invalid JSON: {e}"))
    }
}

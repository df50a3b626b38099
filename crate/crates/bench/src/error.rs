use serde::Serialize;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitCode {
    Success = 0,
    PropertyFailure = 1,
    ConfigError = 2,
    NumericalFailure = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            BenchError::Numerical(_) => ExitCode::NumericalFailure,
            _ => ExitCode::ConfigError,
        }
    }

    /// Short tag used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Config(_) => "config",
            BenchError::Unsupported(_) => "unsupported",
            BenchError::Numerical(_) => "numerical",
            BenchError::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "reason": self.to_string() }).to_string()
    }
}

impl From<adageo::Error> for BenchError {
    fn from(e: adageo::Error) -> Self {
        use adageo::Error as E;
        match e {
            E::Unsupported(m) => BenchError::Unsupported(m),
            E::Numerical(_) | E::SingularPreconditioner => BenchError::Numerical(e.to_string()),
            other => BenchError::Config(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for BenchError {
    fn from(e: serde_json::Error) -> Self {
        BenchError::Config(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Config(format!("trace: {e}"))
    }
}

use franson_core::model::RegimeReport;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_REGIME: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("Franson regime check failed, refusing to run:\n{0}")]
    Regime(Box<RegimeReport>),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Regime(_) => EXIT_REGIME,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    /// Errors raised while checking a scenario before any simulation.
    pub fn from_config(e: franson_core::Error) -> Self {
        match e {
            franson_core::Error::RegimeRefused(r) => CliError::Regime(r),
            franson_core::Error::Io(e) => CliError::Runtime(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<franson_core::Error> for CliError {
    fn from(e: franson_core::Error) -> Self {
        match e {
            franson_core::Error::RegimeRefused(r) => CliError::Regime(r),
            franson_core::Error::InvalidScenario(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

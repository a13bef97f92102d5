use thiserror::Error;

/// Failures of a CLI verb, each with a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("flow degeneration: {0}")]
    Flow(riccilab::Error),

    #[error("failed checks: {}", .0.join(", "))]
    Checks(Vec<String>),

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Core(riccilab::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Flow(_) => 3,
            CliError::Checks(_) => 4,
            CliError::Incompatible(_) | CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

impl From<riccilab::Error> for CliError {
    fn from(e: riccilab::Error) -> Self {
        use riccilab::Error as E;
        match e {
            E::Config(_) | E::Validation(_) | E::Amplitude(_) | E::InsufficientGrids(_) | E::GridMismatch(_) => {
                CliError::Config(e.to_string())
            }
            E::FlowDegeneration { .. }
            | E::HorizonTooLarge { .. }
            | E::NonInvertibleMetric { .. }
            | E::DegeneratePerturbation { .. } => CliError::Flow(e),
            other => CliError::Core(other),
        }
    }
}

use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Missing or malformed input, mismatched lengths.
    #[error("{0}")]
    Input(String),
    /// Flag values out of range.
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Output(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Invalid(_) => ExitCode::from(3),
            CliError::Output(_) | CliError::Failed(_) => ExitCode::from(1),
        }
    }
}

impl From<khem_core::Error> for CliError {
    fn from(e: khem_core::Error) -> Self {
        use khem_core::Error::*;
        let msg = e.to_string();
        match e {
            EmptyBase
            | RaggedRow { .. }
            | SampleOutOfRange { .. }
            | LengthMismatch { .. }
            | TooFewSamples { .. }
            | InvalidPoints(_) => CliError::Input(msg),
            InvalidK { .. }
            | InvalidClusterCount { .. }
            | InvalidArgument(_)
            | OracleTooLarge { .. } => CliError::Invalid(msg),
            OverlappingEdges { .. } | IncompleteCover { .. } | DegenerateInitialization => {
                CliError::Failed(msg)
            }
        }
    }
}

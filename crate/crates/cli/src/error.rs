use std::fmt;

use amsc_core::error::{BackendError, DataError, EvalError, FusionError, SpecialistError};

/// Pipeline stage an error came from. Each maps to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Data,
    Backend,
    Specialist,
    Fusion,
    Eval,
    Output,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 3,
            Stage::Data => 4,
            Stage::Backend => 5,
            Stage::Specialist => 6,
            Stage::Fusion => 7,
            Stage::Eval => 8,
            Stage::Output => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Data => "data",
            Stage::Backend => "backend",
            Stage::Specialist => "specialist",
            Stage::Fusion => "fusion",
            Stage::Eval => "eval",
            Stage::Output => "output",
        }
    }
}

pub const EXIT_CODE_HELP: &str = "\
Exit codes:
  0  success, report written
  2  invalid command line
  3  config error
  4  data error (dataset, knowledge or fixture)
  5  backend error
  6  specialist/panel error
  7  fusion or training error
  8  evaluation error
  9  output error (report or model file)";

#[derive(Debug)]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        CliError {
            stage,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage.name(), self.message)
    }
}

impl std::error::Error for CliError {}

macro_rules! stage_from {
    ($err:ty, $stage:expr) => {
        impl From<$err> for CliError {
            fn from(e: $err) -> Self {
                CliError::new($stage, e.to_string())
            }
        }
    };
}

stage_from!(DataError, Stage::Data);
stage_from!(BackendError, Stage::Backend);
stage_from!(FusionError, Stage::Fusion);

impl From<SpecialistError> for CliError {
    fn from(e: SpecialistError) -> Self {
        let stage = match e {
            SpecialistError::Backend(_) => Stage::Backend,
            _ => Stage::Specialist,
        };
        CliError::new(stage, e.to_string())
    }
}
impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let stage = match e {
            EvalError::Io { .. } => Stage::Output,
            _ => Stage::Eval,
        };
        CliError::new(stage, e.to_string())
    }
}

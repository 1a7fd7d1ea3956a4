use std::path::Path;

use acnn_core::bnn::BnnError;
use acnn_core::capmap::MapError;
use acnn_core::chip::ChipError;
use acnn_core::dataset::DatasetError;
use acnn_core::energy::EnergyError;
use acnn_core::transient::TransientError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Failure reading `path`, which should have held `what`.
    pub fn input(path: &Path, what: &str, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: expected {what}: {err}", path.display()))
    }

    pub fn output(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: cannot write: {err}", path.display()))
    }
}

impl From<BnnError> for CliError {
    fn from(e: BnnError) -> Self {
        match e {
            BnnError::Diverged { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Spec(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidSize(_) | DatasetError::BudgetExceeded { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ChipError> for CliError {
    fn from(e: ChipError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TransientError> for CliError {
    fn from(e: TransientError) -> Self {
        match e {
            TransientError::Invalid(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EnergyError> for CliError {
    fn from(e: EnergyError) -> Self {
        match e {
            EnergyError::Invalid(_) => CliError::Config(e.to_string()),
            EnergyError::Transient(t) => t.into(),
            EnergyError::Nonphysical { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

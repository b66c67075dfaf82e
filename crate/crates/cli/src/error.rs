use ifslab_core::chaosgame::ChaosError;
use ifslab_core::codespace::CodeSpaceError;
use ifslab_core::hyperspace::HyperspaceError;
use ifslab_core::mapkit::{MapError, MapKitError};
use ifslab_core::measurekit::MeasureError;
use thiserror::Error;

use crate::spec::SpecError;

/// Every way a command can end unsuccessfully, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: flags, spec files, data files, budgets. Exit 2.
    #[error("{0}")]
    Validation(String),
    /// The computation ran but failed: escape, non-convergence, a tolerance
    /// check that did not hold. Exit 3.
    #[error("{0}")]
    Numeric(String),
    /// Anything else, I/O included. Exit 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Internal(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numeric(_) => "numeric",
            CliError::Internal(_) => "internal",
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("I/O error: {e}"))
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<MapKitError> for CliError {
    fn from(e: MapKitError) -> Self {
        let msg = e.to_string();
        match e {
            MapKitError::NoConvergence { .. } | MapKitError::Map(_) => CliError::Numeric(msg),
            _ => CliError::Validation(msg),
        }
    }
}

impl From<HyperspaceError> for CliError {
    fn from(e: HyperspaceError) -> Self {
        let msg = e.to_string();
        match e {
            HyperspaceError::Escape { .. } | HyperspaceError::Trapping { .. } | HyperspaceError::Map(_) => {
                CliError::Numeric(msg)
            }
            _ => CliError::Validation(msg),
        }
    }
}

impl From<CodeSpaceError> for CliError {
    fn from(e: CodeSpaceError) -> Self {
        match e {
            CodeSpaceError::Picard { .. } => CliError::Numeric(e.to_string()),
            CodeSpaceError::MapKit(inner) => inner.into(),
            CodeSpaceError::Hyperspace(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ChaosError> for CliError {
    fn from(e: ChaosError) -> Self {
        match e {
            ChaosError::Escape { .. } | ChaosError::EmptyTail { .. } | ChaosError::Map(_) => {
                CliError::Numeric(e.to_string())
            }
            ChaosError::InvalidConfig(_) => CliError::Validation(e.to_string()),
            ChaosError::Hyperspace(inner) => inner.into(),
            ChaosError::CodeSpace(inner) => inner.into(),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        let msg = e.to_string();
        match e {
            MeasureError::NoConvergence { .. }
            | MeasureError::NotCertified { .. }
            | MeasureError::Infeasible(_)
            | MeasureError::Map(_) => CliError::Numeric(msg),
            MeasureError::MapKit(inner) => inner.into(),
            MeasureError::Hyperspace(inner) => inner.into(),
            _ => CliError::Validation(msg),
        }
    }
}

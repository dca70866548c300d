//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("lattice side must be at least 1")]
    InvalidSide,
    #[error("sites {i} and {j} coincide (separation {dist:.3e})")]
    CoincidentSites { i: usize, j: usize, dist: f64 },
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
    #[error("mode index {index} out of range (N = {n})")]
    ModeIndex { index: usize, n: usize },
    #[error("perturbative regime violation: {0}")]
    Regime(String),
    #[error("symmetry analysis failed: {0}")]
    Symmetry(String),
    #[error("radiative matrix is numerically defective: inversion residual {residual:.3e}")]
    DefectiveMatrix { residual: f64 },
    #[error("frequency window too narrow: convergence estimate {estimate:.3e} exceeds {tolerance:.1e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },
    #[error("{n} sites exceed the exact-diagonalization limit of {max}")]
    DimensionGuard { n: usize, max: usize },
    #[error("time step too coarse: halving dt moves final populations by {delta:.3e}")]
    StepSize { delta: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl CoreError {
    /// True for failures of the numerics themselves, as opposed to rejected
    /// inputs. Callers that need exit-code style triage can rely on this split.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            CoreError::CoincidentSites { .. }
                | CoreError::Eigensolver(_)
                | CoreError::Regime(_)
                | CoreError::Symmetry(_)
                | CoreError::DefectiveMatrix { .. }
                | CoreError::QuadratureNotConverged { .. }
                | CoreError::StepSize { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;

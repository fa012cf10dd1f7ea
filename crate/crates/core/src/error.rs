use crate::solver::SolveDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample {value} at point {index} {coords:?}")]
    Sampling {
        index: usize,
        coords: Vec<f64>,
        value: f64,
    },

    #[error("ball of radius {radius} around {center:?} contains no grid points")]
    EmptyBall { center: Vec<f64>, radius: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stencil at index {0} reaches outside the grid")]
    StencilOutOfRange(usize),

    #[error("affine fit needs at least {needed} points, ball holds {found}")]
    Underdetermined { needed: usize, found: usize },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("scaled domain escapes the original extent: {0}")]
    DomainMapping(String),

    #[error("no convergence after {} sweeps (residual {:.3e})", .0.total_iterations(), .0.final_residual)]
    ConvergenceFailure(Box<SolveDiagnostics>),

    #[error("numerical blow-up at sweep {sweep}")]
    NumericalBlowup { sweep: usize },

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("power iteration did not converge after {iterations} iterations (relative change {change:.3e})")]
    PowerIterationNotConverged { iterations: usize, change: f64 },

    #[error("Dykstra projection did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    ProjectionNotConverged { sweeps: usize, residual: f64 },

    #[error("linear program is unbounded")]
    UnboundedProgram,

    #[error("linear program exceeded {0} pivots")]
    PivotLimit(usize),

    #[error("point is not feasible: {0}")]
    Infeasible(String),

    #[error("loss evaluated outside its domain: {0}")]
    Domain(String),

    #[error("expected a unit vector, norm is {0}")]
    NonUnitDirection(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("learner protocol violated: {0}")]
    Protocol(&'static str),

    #[error("price data: {0}")]
    PriceData(String),

    #[error("config: {0}")]
    Config(String),

    #[error("trace has {trace} rounds but the loss sequence has {losses}")]
    LengthMismatch { trace: usize, losses: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

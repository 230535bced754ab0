use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative order {order} exceeds oracle capability {max}")]
    Capability { order: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ill-conditioned system (cond {cond:.3e} > cap {cap:.1e}); {hint}")]
    IllConditioned { cond: f64, cap: f64, hint: String },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("schedule infeasible at row {row}: {detail}")]
    ScheduleInfeasible { row: usize, detail: String },
    #[error("smoothness violation: order-{order} jump {jump:.3e} exceeds tolerance")]
    SmoothnessViolation { order: usize, jump: f64 },
    #[error("rank {rank} below required {required}; target not representable in this basis")]
    RankDeficient { rank: usize, required: usize },
    #[error("fit residual above threshold in {} cell(s), worst unit {} cell {} residual {:.3e}", .0.len(), .0[0].unit, .0[0].cell, .0[0].residual)]
    FitResidual(Vec<CellResidual>),
    #[error("tolerance {tol:.3e} unreachable: best error {best:.3e}, limiting knot {knot}")]
    ToleranceUnreachable { tol: f64, best: f64, knot: f64 },
    #[error("training diverged at step {step}")]
    Divergence { step: usize, trace: Vec<f64> },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("baseline error is zero; relative tests undefined")]
    ExactFit,
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. }
                | Error::Singular(_)
                | Error::ScheduleInfeasible { .. }
                | Error::SmoothnessViolation { .. }
                | Error::RankDeficient { .. }
                | Error::FitResidual(_)
                | Error::ToleranceUnreachable { .. }
                | Error::Divergence { .. }
                | Error::ExactFit
                | Error::Domain(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CellResidual {
    pub unit: usize,
    pub cell: usize,
    pub residual: f64,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{what} is not finite ({x})")))
    }
}

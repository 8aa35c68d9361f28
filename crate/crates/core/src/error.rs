use thiserror::Error;

/// Errors raised by the forward model, the inversion and the design search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EitError {
    #[error("point ({x}, {y}) lies outside the closed unit disk")]
    OutsideDisk { x: f64, y: f64 },

    #[error("point ({x}, {y}) is not strictly inside the unit disk")]
    NotInterior { x: f64, y: f64 },

    #[error("point ({x}, {y}) coincides with an electrode")]
    AtElectrode { x: f64, y: f64 },

    #[error("electrode angles must be distinct")]
    CoincidentElectrodes,

    #[error("invalid ellipse parameters: {0}")]
    InvalidEllipse(String),

    #[error("invalid electrode configuration: {0}")]
    InvalidElectrodes(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: last relative change {last_change:e} with {points} points per axis")]
    QuadratureNotConverged { last_change: f64, points: usize },

    #[error("no start of the multistart optimizer ended at an admissible ellipse")]
    NoFeasibleStart,

    #[error("discrepancy bracket failed at the {end} end: residual {residual:e} vs target {target:e}")]
    BracketFailure {
        end: BracketEnd,
        residual: f64,
        target: f64,
    },

    #[error("discrepancy principle not attained: best residual {residual:e} vs target {target:e}")]
    DiscrepancyNotAttained { residual: f64, target: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketEnd {
    Lower,
    Upper,
}

impl std::fmt::Display for BracketEnd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BracketEnd::Lower => f.write_str("lower (lambda = 1e-12)"),
            BracketEnd::Upper => f.write_str("upper (lambda = 1e2)"),
        }
    }
}

impl EitError {
    /// True for failures of an iterative numerical method, as opposed to
    /// invalid inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            EitError::QuadratureNotConverged { .. }
                | EitError::NoFeasibleStart
                | EitError::BracketFailure { .. }
                | EitError::DiscrepancyNotAttained { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, EitError>;

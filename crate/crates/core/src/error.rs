use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Hilbert-space dimension overflows for {what}")]
    DimensionOverflow { what: String },

    #[error("eigensolver did not converge (dim = {dim})")]
    NoConvergence { dim: usize },

    #[error("degenerate spectrum: every level spacing lies below the floor {floor:e}")]
    DegenerateSpectrum { floor: f64 },

    #[error("degenerate scaling denominator: P_bar - P_inf = {0:e}")]
    DegenerateDenominator(f64),

    #[error("non-positive value {value:e} at x = {x:e} (point {index}) inside the fit window")]
    NonPositive { index: usize, x: f64, value: f64 },

    #[error("P_bar = {p_bar:e} does not exceed P_inf = {p_inf:e} at D = {dim}")]
    BelowAsymptote { dim: f64, p_bar: f64, p_inf: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

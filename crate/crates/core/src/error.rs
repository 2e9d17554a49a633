use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H*| entry = {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix dimension {0} not supported (expected one of {1:?})")]
    BadDimension(usize, &'static [usize]),

    #[error("potential is not scalar: max anticommutator norm {norm:.3e} at sample {index}")]
    NotScalar { norm: f64, index: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("coefficient not locally integrable at x = {x}")]
    NotLocallyIntegrable { x: f64 },

    #[error("coefficient evaluation failed at x = {x}: {value}")]
    BadCoefficient { x: f64, value: f64 },

    #[error("point outside domain: {0:?}")]
    OutsideDomain(Vec<f64>),

    #[error("initial point x0 = {x0} is not strictly interior")]
    NotInterior { x0: f64 },

    #[error("initial spinor is zero")]
    ZeroInitialState,

    #[error("quadrature failed near {x}: {reason}")]
    QuadratureFailure { x: f64, reason: String },

    #[error("|l(x)| = {value} < 1 at grid point {index}; mu estimate requires |l| >= 1")]
    EllBelowOne { value: f64, index: usize },

    #[error("linear solve failed at step {step}: residual {residual:.3e}")]
    LinearSolve { step: usize, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gauge removal requires v2 to be locally integrable")]
    GaugeNotIntegrable,
}

pub type Result<T> = std::result::Result<T, Error>;

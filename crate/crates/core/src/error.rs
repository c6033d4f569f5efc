use thiserror::Error;

/// Errors produced while building distributions, generators, or running the
/// numerical pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("mass at interior state {index} is zero; birth-death chain would be reducible")]
    InteriorZeroMass { index: usize },

    #[error("all weights are zero")]
    AllZeroWeights,

    #[error("generator is not reversible (max detailed-balance residual {residual:e})")]
    NotReversible { residual: f64 },

    #[error("restricted linear system is singular; chain reducible near state {state}")]
    Reducible { state: usize },

    #[error("stationary weights are not summable on an infinite window; truncate first")]
    NonSummable,

    #[error("window of {window} states exceeds the exhaustive-enumeration guard of {guard}")]
    WindowTooLarge { window: usize, guard: usize },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    #[error("smallest eigenvalue {value:e} is not negligible against lambda_max {scale:e}")]
    SpectrumConditioning { value: f64, scale: f64 },

    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("no decoherence-free wavevector for separation {delta_x} with n = {n}")]
    NoDfMode { delta_x: usize, n: usize },

    #[error("basis state {0} is not valid for this configuration")]
    InvalidState(String),

    #[error("basis of dimension {basis} does not match configuration of dimension {config}")]
    BasisMismatch { basis: usize, config: usize },

    #[error("oracle Hilbert space of dimension {0} exceeds the guard")]
    OracleTooLarge(usize),

    #[error("dense diagonalization requested for dimension {dim} above threshold {threshold}")]
    DenseTooLarge { dim: usize, threshold: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("no bound state found: best IPR {best_ipr:.3e} below floor {floor:.3e}")]
    BicNotFound { best_ipr: f64, floor: f64 },

    #[error("result carries no eigenvectors")]
    MissingEigenvectors,

    #[error("initial-state preset `{preset}` is incompatible with the {variant} coupling")]
    IncompatiblePreset { preset: String, variant: String },

    #[error("time step underflow at t = {time} (step {step:.3e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("sample times must be non-negative and ascending")]
    InvalidTimes,

    #[error("energy {energy} hits a pole of the perturbative sums (|Δ₂| must exceed 2J = {band_edge})")]
    Pole { energy: f64, band_edge: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("configuration error(s):\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}

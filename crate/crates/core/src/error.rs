use thiserror::Error;

/// Errors raised anywhere in the simulation, calibration or I/O pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or model field failed validation. `field` is a dotted path
    /// such as `virus.sar`.
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model error: {0}")]
    Model(String),

    /// Input outside the mathematical domain of a function (log of a
    /// non-positive probability, non-positive rate, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rate {rate:.6e} exceeds the resonance maximum {max:.6e}")]
    InfeasibleRate { rate: f64, max: f64 },

    #[error("lambda = {lambda} leaves the perturbative regime: diagonal entry {entry:.3e} < 0")]
    PerturbativeRegime { lambda: f64, entry: f64 },

    #[error("trace drift {drift:.3e} exceeds tolerance; reduce the step size")]
    StepSize { drift: f64 },

    #[error("engine `{engine}` refuses a {qubits}-qubit model (limit {limit})")]
    EngineRefusal {
        engine: &'static str,
        qubits: usize,
        limit: usize,
    },

    #[error("calibration quality: {0}")]
    CalibrationQuality(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Config(_) | Error::Json(_) => 2,
            Error::EngineRefusal { .. } => 3,
            Error::CalibrationQuality(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

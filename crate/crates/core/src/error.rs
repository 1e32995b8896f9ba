use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports. The variants map one-to-one onto the
/// CLI exit-code classes (design, geometry, solver, analysis).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),
    #[error("singular design equation: {0}")]
    Singularity(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("solver configuration error: {0}")]
    Config(String),
    #[error("field divergence detected at step {step}")]
    Divergence { step: usize },
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("frequency {0} Hz not present in recorded data")]
    FrequencyLookup(f64),
    #[error("energy accounting error: efficiency {0:.4} exceeds 1.01")]
    EnergyAccounting(f64),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
}

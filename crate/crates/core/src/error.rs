use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular jet: {0}")]
    SingularJet(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("residual {residual:.3e} exceeds limit {limit:.3e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("no admissible eigenvalue clustering: {0}")]
    ClusteringFailed(String),

    #[error("defective bundle frame: {0}")]
    DefectiveFrame(String),

    #[error("torus is not attracting (largest spectral radius {beta_max:.6})")]
    NotAttracting { beta_max: f64 },

    #[error("external resonance: {0}")]
    ExternalResonance(String),

    #[error("parametric resonance: {0}")]
    ParametricResonance(String),

    #[error("singular frame: {0}")]
    SingularFrame(String),

    #[error("conjugate map is not rotation equivariant (deviation {0:.3e})")]
    NotRotationEquivariant(f64),

    #[error("amplitude parametrisation folds at rho = {0:.6}")]
    NonMonotoneKappa(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

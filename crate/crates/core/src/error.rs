use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("profile violation: {what} = {value} at {location} (must be positive)")]
    ProfileViolation {
        what: &'static str,
        value: f64,
        location: String,
    },

    #[error("vertex cap exceeded: {requested} vertices requested, cap is {cap}")]
    VertexCapExceeded { requested: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),

    #[error("invalid graph at {path}: {message}")]
    InvalidGraph { path: String, message: String },

    #[error("region is empty")]
    EmptyRegion,

    #[error("region is not a subset of the vertex set (index {0} out of range)")]
    NotSubset(usize),

    #[error("exhaustion level {level} does not strictly contain level {prev}", prev = level - 1)]
    NotNested { level: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("phi must be strictly positive; vertex `{vertex}` has {value}")]
    NonPositivePhi { vertex: String, value: f64 },

    #[error("dimension {dim} exceeds the dense cap {cap}; request iterative mode")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("profile of the envelope factorization ({entries} entries) exceeds the cap {cap}")]
    EnvelopeTooLarge { entries: usize, cap: usize },

    #[error("region is disconnected ({components} components); request per-component results")]
    Disconnected { components: usize },

    #[error("the exterior of K is empty")]
    EmptyExterior,

    #[error("operator is not positive definite (lowest eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("singular Dirichlet restriction (lowest eigenvalue {eigenvalue:e}); the base looks parabolic on this region")]
    SingularRestriction { eigenvalue: f64 },

    #[error("negative potential at vertex `{vertex}`; Green kernels need W + V >= 0, shift the base first")]
    NegativePotential { vertex: String },

    #[error("potential support escapes the first exhaustion level (vertex `{vertex}`)")]
    SupportEscapesLevel { vertex: String },

    #[error("vector certificate inapplicable: <Hu,u> = {form_value:e} > 0")]
    CertificateInapplicable { form_value: f64 },

    #[error("exterior solution not positive at `{vertex}` (value {value:e}, exterior lambda1 {lambda1:e})")]
    PositivityFailure {
        vertex: String,
        value: f64,
        lambda1: f64,
    },

    #[error("exterior system is not stable: {0}")]
    Stability(String),

    #[error("all counts are zero; increase the coupling")]
    InsufficientDepth,

    #[error("need at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("shift failed: shifted base still has lowest eigenvalue {eigenvalue:e} after escalation")]
    ShiftFailed { eigenvalue: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the
/// geometry, model-building, dynamics and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    // geometry
    #[error("field exits through the departure facet immediately (t <= tol)")]
    OutwardField,
    #[error("no facet ahead of the ray; polytope is corrupt or unbounded")]
    UnboundedFlight,
    #[error("vector violates the affine hull constraint")]
    OffHull,
    #[error("polytope intersection has empty interior")]
    EmptyPolytope,
    #[error("polytope construction failed: {0}")]
    BadPolytope(String),

    // model building
    #[error("rates must sum to one (got {0})")]
    RateImbalance(f64),
    #[error("polygon vertices are not convex in counterclockwise order")]
    NonConvex,
    #[error("switch policy probabilities invalid: {0}")]
    BadProbabilities(String),
    #[error("virtual ray never reaches the original boundary")]
    NoVirtualHit,
    #[error("model invariant violated: {0}")]
    BadModel(String),

    // dynamics
    #[error("degenerate vertex: no candidate field re-enters the interior")]
    DegenerateVertex,
    #[error("flight grazes the target facet (|n.v| <= tol)")]
    GrazingFlight,
    #[error("packet step must be positive and below the inradius")]
    StepTooLarge,

    // analysis
    #[error("orbit too short for the requested estimate (need >= {0} steps)")]
    OrbitTooShort(usize),
    #[error("partition elements overlap or fail to cover the boundary")]
    InvalidPartition(String),
    #[error("empty orbit supplied")]
    EmptyOrbit,
    #[error("vertex line is parallel to the opposite face")]
    LineParallelToFace,
    #[error("operation unsupported for this model: {0}")]
    Unsupported(String),

    // cli / io
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("config schema violation: {0}")]
    SchemaViolation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code classification: 2 config, 3 dynamical/analysis.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse(_) | Error::SchemaViolation(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

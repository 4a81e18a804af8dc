use thiserror::Error;

/// Errors raised by the geometric and numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate vector")]
    DegenerateVector,
    #[error("branch cut violation at z = {re} + {im}i")]
    BranchCutViolation { re: f64, im: f64 },
    #[error("empty interval ({sigma}, {tau})")]
    EmptyInterval { sigma: f64, tau: f64 },
    #[error("outside domain: {0}")]
    OutsideDomain(String),
    #[error("pole at jump point {0}")]
    Pole(f64),
    #[error("pole of Moebius map")]
    MoebiusPole,
    #[error("ordering collapse: jump points lost strict ordering")]
    OrderingCollapse,
    #[error("self-intersecting polygon")]
    SelfIntersecting,
    #[error("non-closing heights: closure error {0:e}")]
    NonClosingHeights(f64),
    #[error("invalid radius {0}")]
    InvalidRadius(f64),
    #[error("not a shrinking-singularity configuration: {0}")]
    NotShrinkingConfiguration(String),
    #[error("missing markers: {0}")]
    MissingMarkers(String),
    #[error("not spacelike: |grad psi|^2 = {0} at an interior sample")]
    NotSpacelike(f64),
    #[error("unknown surface {0:?}")]
    UnknownSurface(String),
    #[error("inverse map did not converge at ({x}, {y})")]
    InverseMap { x: f64, y: f64 },
    #[error("inconsistent tiling: {0}")]
    InconsistentTiling(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("frame is rank deficient (Gram determinant {gram_det:e})")]
    RankDeficient { gram_det: f64 },
    #[error("point is not on the boundary surface (|sdf| = {distance:e})")]
    NotOnSurface { distance: f64 },
    #[error("invalid projector: {0}")]
    InvalidPlane(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("atom {index} has invalid weight {value}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("contact angle {value} is outside (0, pi)")]
    InvalidAngle { value: f64 },
    #[error("test field '{name}' has class {found}, expected {expected}")]
    FieldClassError {
        name: String,
        expected: String,
        found: String,
    },
    #[error("plane projects the surface normal to length {norm:e}")]
    DegenerateProjection { norm: f64 },
    #[error("plane is off the capillary bundle: |P(nu)| = {norm:e} < sin(beta)/2")]
    OffBundle { norm: f64 },
    #[error("boundary atom {index} violates the bundle (gap_i {gap_i:e}, gap_ii {gap_ii:e})")]
    BundleViolation { index: usize, gap_i: f64, gap_ii: f64 },
    #[error("cos(beta) vanishes at the base point")]
    AngleDegenerate,
    #[error("no boundary site within {tol:e} of the base point")]
    NoSiteNearPoint { tol: f64 },
    #[error("contact angle pi/2 is not allowed for this construction")]
    AngleIsOrthogonal,
    #[error("chart differential has rank below {dim} at parameter {node:?}")]
    DegenerateChart { dim: usize, node: Vec<f64> },
    #[error("exponent p = {p} must exceed m = {m}")]
    ExponentError { p: f64, m: usize },
    #[error("radii out of order: {0}")]
    RadiusOrder(String),
    #[error("no Lambda on the grid 2^-10..2^10 makes the curve monotone")]
    NoLambdaFound,
    #[error("density curve is not constant (spread {spread:e} > {tol:e})")]
    NotConical { spread: f64, tol: f64 },
    #[error("cone atom lies outside the half-space (<x, nu_H> = {value:e})")]
    NotContained { value: f64 },
    #[error("mass comparability quotient has a zero denominator")]
    DivisionDegenerate,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("fixture record is inconsistent: {0}")]
    FixtureInconsistent(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

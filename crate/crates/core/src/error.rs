use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown gallery domain `{0}`")]
    UnknownGallery(String),
    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("radius ladder is empty")]
    RadiusLadderEmpty,
    #[error("no domain cells within radius {r} of ({x}, {y})")]
    EmptyBall { x: f64, y: f64, r: f64 },
    #[error("({0}, {1}) is not a boundary point of the domain")]
    NotABoundaryPoint(f64, f64),
    #[error("cell {0} is not in the domain")]
    NotInDomain(usize),
    #[error("objects belong to different domains")]
    DomainMismatch,
    #[error("domain is not finitely connected at the probe point")]
    NotFinitelyConnected,
    #[error("plates overlap")]
    PlateOverlap,
    #[error("plates are not disjoint")]
    NotDisjoint,
    #[error("({0}, {1}) is not accessible at grid resolution")]
    Inaccessible(f64, f64),
    #[error("unresolved at grid resolution: {0}")]
    Unresolved(String),
    #[error("chain limit is not a singleton end")]
    NotSingleton,
    #[error("atlas scale is incompatible: {0}")]
    ScaleMismatch(String),
    #[error("boundary collar is empty")]
    CollarEmpty,
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("domain was not assessed as John")]
    NotJohn,
    #[error("curve violates the John inequality at arclength {t} (ratio {ratio} > {bound})")]
    RatioViolated { t: f64, ratio: f64, bound: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

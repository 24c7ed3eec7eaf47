use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("density has zero mass")]
    ZeroMass,

    #[error("{moment} moment diverges (truncation levels disagree by {relative_gap:.3e})")]
    DivergentMoment { moment: &'static str, relative_gap: f64 },

    #[error("density is not centered: barycenter {barycenter:.3e} exceeds tolerance {tol:.1e}")]
    NotCentered { barycenter: f64, tol: f64 },

    #[error("0 is not interior to the support [{lower}, {upper}]")]
    OriginNotInterior { lower: f64, upper: f64 },

    #[error("class hypothesis fails: worst violation {violation:.3e} at x = {location}")]
    ClassViolation { violation: f64, location: f64 },

    #[error("no admissible truncation: {0}")]
    NoAdmissibleTruncation(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("input is not separable: factorization residual {residual:.3e}")]
    NotSeparable { residual: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

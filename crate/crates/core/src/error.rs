use thiserror::Error;

/// Errors raised by model construction and the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{field}` must be {requirement}, got {value}")]
    NegativeRate {
        field: String,
        value: f64,
        requirement: &'static str,
    },
    #[error("field `t0` must lie in [0, 1], got {0}")]
    T0OutOfRange(f64),
    #[error("field `{field}` is not finite")]
    NonFinite { field: String },
    #[error("cannot parse `{input}` for `{field}`: {reason}")]
    BadQuantity { field: String, input: String, reason: String },
    #[error("frequency `{field}` must be positive, got {value}")]
    NonPositiveFrequency { field: String, value: f64 },
    #[error("steady-state denominator vanishes at u = {u}")]
    SingularDenominator { u: f64 },
    #[error("steady-state root search did not converge (best residual {best_residual:e} rad/s)")]
    NoConvergence { best_residual: f64 },
    #[error("fluctuation system is singular at xi = {xi} rad/s")]
    SingularSystem { xi: f64 },
    #[error("appendix denominator B vanishes at xi = {xi} rad/s")]
    ZeroB { xi: f64 },
    #[error("transmission is undefined for a zero probe amplitude")]
    ZeroProbe,
    #[error("group delay at delta_p = {delta_p} rad/s did not converge after {halvings} step halvings")]
    NonConvergentDerivative { delta_p: f64, halvings: u32 },
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("unknown preset `{name}`; available: {}", catalog.join(", "))]
    UnknownPreset { name: String, catalog: Vec<String> },
    #[error("no extremum of T inside the search range")]
    NoExtremum,
    #[error("search range [{lo}, {hi}] is outside the table span")]
    BadRange { lo: f64, hi: f64 },
    #[error("mode volume must be positive")]
    ZeroModeVolume,
    #[error("I/O error: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for failures of the numerical core, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularDenominator { .. }
            | Error::NoConvergence { .. }
            | Error::SingularSystem { .. }
            | Error::ZeroB { .. }
            | Error::ZeroProbe
            | Error::NonConvergentDerivative { .. }
            | Error::NoExtremum => true,
            Error::Row { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_row(self, row: usize) -> Error {
        Error::Row {
            row,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

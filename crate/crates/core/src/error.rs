use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The CLI maps [`Error::Domain`], [`Error::Config`] and [`Error::Io`] to exit
/// code 1 and the numeric failures to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, achieved error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("series fit residual {residual:e} exceeds limit {limit:e}")]
    Fit { residual: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::RootFind(_) | Error::Fit { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

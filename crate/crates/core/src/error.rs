use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is outside its valid domain.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    /// A function argument violates its precondition.
    #[error("invalid argument `{name}` = {value}: {reason}")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A coverage partial sum left [0, 1]; the inner quadrature is not trustworthy.
    #[error("coverage partial sum {value} at order {order} left [0, 1] (s = {s:e})")]
    CoverageOutOfRange { value: f64, order: usize, s: f64 },

    /// A Monte Carlo realization contained no UAV at all.
    #[error("realization contains no UAV")]
    EmptyRealization,
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

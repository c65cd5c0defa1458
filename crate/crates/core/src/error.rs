use thiserror::Error;

/// Errors raised by the screening engine.
///
/// Variant names double as the stable machine-readable error names reported
/// by the CLI and the HTTP service (see [`Error::name`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DegenerateTest: {0}")]
    DegenerateTest(&'static str),
    #[error("UndefinedRatio: sensitivity 0 and specificity 1 give a 0/0 likelihood ratio")]
    UndefinedRatio,
    #[error("BoundaryLogit: logit is undefined at probability {0}")]
    BoundaryLogit(f64),
    #[error("EmptyCohort: at least one subject is required")]
    EmptyCohort,
    #[error("UninformativeTest: Youden's J = {0} must be positive")]
    UninformativeTest(f64),
    #[error("InvalidPrior: beta shape parameters must be positive and finite, got ({alpha}, {beta})")]
    InvalidPrior { alpha: f64, beta: f64 },
    #[error("UnnormalizedDensity: density integrates to {0}")]
    UnnormalizedDensity(f64),
    #[error("InvalidTarget: target {target} is below pretest probability {pretest}")]
    InvalidTarget { pretest: f64, target: f64 },
    #[error("OutOfRange: {field} = {value} ({expected})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("CountMismatch: {field} = {count} exceeds {total_field} = {total}")]
    CountMismatch {
        field: &'static str,
        count: u64,
        total_field: &'static str,
        total: u64,
    },
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::DegenerateTest(_) => "DegenerateTest",
            Error::UndefinedRatio => "UndefinedRatio",
            Error::BoundaryLogit(_) => "BoundaryLogit",
            Error::EmptyCohort => "EmptyCohort",
            Error::UninformativeTest(_) => "UninformativeTest",
            Error::InvalidPrior { .. } => "InvalidPrior",
            Error::UnnormalizedDensity(_) => "UnnormalizedDensity",
            Error::InvalidTarget { .. } => "InvalidTarget",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::CountMismatch { .. } => "CountMismatch",
        }
    }

    /// True for malformed input (a value outside its declared domain), as
    /// opposed to well-formed input on which the mathematics is undefined.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::OutOfRange { .. } | Error::CountMismatch { .. })
    }

    /// Name of the offending input field, when there is one.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            Error::OutOfRange { field, .. } | Error::CountMismatch { field, .. } => Some(field),
            _ => None,
        }
    }

    pub(crate) fn out_of_range(field: &'static str, value: f64, expected: &'static str) -> Self {
        Error::OutOfRange {
            field,
            value,
            expected,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("time points are not sorted ascending")]
    Unsorted,
    #[error("interval start {start} exceeds end {end}")]
    ReversedInterval { start: f64, end: f64 },
    #[error("expected an even number of points, got {0}")]
    OddPointCount(usize),
    #[error("split index {ell} outside 1..={m}")]
    SplitOutOfRange { ell: usize, m: usize },
    #[error("expected an odd diagram order, got {0}")]
    EvenOrder(usize),
    #[error("time {time} outside the bold-propagator horizon {horizon}")]
    OutsideHorizon { time: f64, horizon: f64 },
    #[error("Hermiticity lost at step {step}: deviation {deviation:e}")]
    HermiticityLost { step: usize, deviation: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// True for failures of runtime numerical checks (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::HermiticityLost { .. } | Error::OutsideHorizon { .. } | Error::NonFinite(_))
    }
}

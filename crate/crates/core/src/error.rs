use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("window [{center} - {halfwidth}, {center} + {halfwidth}] extends below 1")]
    WindowBelowOne { center: u64, halfwidth: u64 },

    #[error("window [{center} - {halfwidth}, {center} + {halfwidth}] overflows 2^63")]
    WindowOverflow { center: u64, halfwidth: u64 },

    #[error("window halfwidth {0} exceeds the supported maximum of 10^7")]
    WindowTooWide(u64),

    #[error("{0} is outside the factorization range of the smallest-prime-factor table")]
    FactorizationLimit(u64),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("lower bound is undefined (negative radicand with non-integer exponent)")]
    UndefinedBound,

    #[error("negative radicand {0} in trained score interval")]
    NegativeRadicand(f64),

    #[error("effective coverage window is empty")]
    EmptyWindow,

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("fit did not converge: {0}")]
    FitFailed(String),

    #[error("integer {0} is not available from the window source")]
    Unavailable(u64),

    #[error("cache file: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

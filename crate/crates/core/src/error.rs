//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("no valid rows in {0}")]
    NoValidRows(String),

    #[error(
        "{bad} of {total} rows in {path} have nonpositive prices, above the allowed fraction {limit}"
    )]
    TooManyBadPrices {
        path: String,
        bad: usize,
        total: usize,
        limit: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("panel does not conform to block spec: {0}")]
    SpecMismatch(String),

    #[error("zero denominator in diurnal normalization: component {0}")]
    ZeroNormalization(&'static str),

    #[error("nonpositive diurnal variance {component} at block {block}")]
    NonpositiveDiagonal { component: &'static str, block: usize },

    #[error("HAC lag length {lags} must be smaller than the day count {days}")]
    LagTooLong { lags: usize, days: usize },

    #[error("long-run variance is zero at block {0} while the correlation curve deviates from one")]
    ZeroGamma(usize),

    #[error("Feller condition violated: {0}")]
    Feller(String),

    #[error("no valid hedge bins")]
    NoValidBins,

    #[error("hedge variance ratio denominator is zero")]
    ZeroHedgeDenominator,

    #[error("{0}")]
    Other(String),
}

use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Requested working precision is below the supported floor.
    #[error("working precision of {requested} digits is below the minimum of {minimum}")]
    PrecisionConfig { requested: u32, minimum: u32 },

    /// The magnitude of an argument consumed the available digit budget;
    /// the caller must rebuild the context with more digits.
    #[error("insufficient precision: argument with ~{magnitude_digits} integer digits leaves fewer than {needed_digits} fractional digits at {available_digits}-digit precision")]
    InsufficientPrecision {
        magnitude_digits: u32,
        needed_digits: u32,
        available_digits: u32,
    },

    /// Inverse-temperature or another physical parameter out of its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The Lagrangian-to-Eulerian inversion degenerates at zeros of the
    /// transverse or longitudinal coefficient.
    #[error("singular time t = {t}: |{which}| < 1e-20, the flow map is not invertible here")]
    SingularTime { t: f64, which: &'static str },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameter outside the supported sweep range.
    #[error("range error: {0}")]
    Range(String),

    /// A continued-fraction expansion was requested for a rational value.
    #[error("degenerate quadratic irrational: value is rational")]
    RationalAlpha,

    /// Malformed textual input (decimal or rational literals).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input for {0}")]
    NonFinite(&'static str),

    #[error("inadmissible parameters: {}", .0.join("; "))]
    Inadmissible(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gamma pole: {0}")]
    GammaPole(String),

    #[error("curve undefined here: {0}")]
    CurveUndefined(String),

    #[error("quadrature failed on [{a}, {b}]: estimate {value:e} with error {error:e} after {intervals} intervals")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
        intervals: usize,
    },

    #[error("divergent integral ({which}): tail exponent {exponent:.4} at {location}")]
    DivergentTail {
        which: &'static str,
        location: &'static str,
        exponent: f64,
    },

    #[error("eigen-iteration did not converge, residual norm {residual:e}")]
    EigenNonConvergence { residual: f64 },

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("newton iteration failed at t={t}: {reason}")]
    Newton { t: f64, reason: String },

    #[error("sandwich violated at cell {cell} (s={s}): {value:e} not in [{lower:e}, {upper:e}]")]
    SandwichViolated {
        cell: usize,
        s: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("fit window empty: {0}")]
    EmptyFitWindow(String),

    #[error("mass mismatch: got {got:e}, expected {expected:e}")]
    MassMismatch { got: f64, expected: f64 },
}

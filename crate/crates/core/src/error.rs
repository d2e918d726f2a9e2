use thiserror::Error;

/// Errors raised by the numeric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("matrix is reducible")]
    ReducibleMatrix,

    #[error("matrix is periodic with period {0}")]
    Periodic(usize),

    #[error("power iteration did not converge after {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("channel assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("value {value} outside ({lower}, {upper})")]
    OutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("rate {rate} outside the admissible interval ({lower}, {upper})")]
    RateOutOfRange { rate: f64, lower: f64, upper: f64 },

    #[error("table of size {size} exceeds the limit {limit}")]
    TooLarge { size: f64, limit: f64 },

    #[error("dispersion {0} is not positive")]
    DegenerateDispersion(f64),

    #[error(
        "sandwich violated: {family} theta={theta} theta'={theta_prime:?} n={n} margin={margin:e}"
    )]
    SandwichViolation {
        family: &'static str,
        theta: f64,
        theta_prime: Option<f64>,
        n: usize,
        margin: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

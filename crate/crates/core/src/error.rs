use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse model document: {0}")]
    Parse(String),

    #[error("weights of `{measure}` sum to {sum}, expected 1 within {tol:e}")]
    WeightSum { measure: &'static str, sum: f64, tol: f64 },

    #[error("invalid measure `{measure}`: {reason}")]
    InvalidMeasure { measure: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("model rejected, hypotheses not satisfied: {0}")]
    ModelRejected(String),

    #[error("site {0:?} lies below the half-space")]
    SiteBelowHalfSpace(Vec<i64>),

    #[error("window radius {radius} is smaller than the largest step norm {step}")]
    WindowTooSmall { radius: i64, step: i64 },

    #[error("exponent {exponent} exceeds the overflow guard")]
    Range { exponent: f64 },

    #[error("phi(alpha, .) = 1 has no root: min over beta is {min_value}")]
    NoRoot { min_value: f64 },

    #[error("point is outside D: phi(a) = {phi}")]
    OutsideD { phi: f64 },

    #[error("point is not on the boundary of D-hat: phi(a) = {phi}, phi0(a-bar) = {phi0_bar}")]
    NotOnBoundary { phi: f64, phi0_bar: f64 },

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("harmonic function undefined: {0}")]
    HarmonicUndefined(String),

    #[error("non-positive harmonic value {value} at {site:?}")]
    NonPositiveHarmonic { value: f64, site: Vec<i64> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("reachable set exceeds the memory cap of {cap} sites")]
    MemoryCap { cap: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("kernel is not substochastic: {0}")]
    NotSubstochastic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

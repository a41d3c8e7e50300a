use thiserror::Error;

use crate::params::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("system is unstable: drift eigenvalue real parts {0:?}")]
    Unstable([f64; 2]),

    #[error("singular steady-state denominator (|d| = {0:e})")]
    Singular(f64),

    #[error("degenerate dispersion factor D = {0:e}")]
    DegenerateDispersion(f64),

    #[error("time step {dt} exceeds the limit {limit} for this integrator")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("adaptive step rejected at t = {t}: step {h:e} fell below the minimum")]
    StepRejected { t: f64, h: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no resolvable peak: {0}")]
    NoPeak(String),

    #[error("ambiguous peak: candidates at {first} and {second} are within 10% in height")]
    AmbiguousPeak { first: f64, second: f64 },

    #[error("left-peak frequency {omega} lies above -J = {bound}; no shift >= 0 reproduces it")]
    OutOfRange { omega: f64, bound: f64 },

    #[error("peak height {height} lies outside the tabulated range [{lo}, {hi}]")]
    HeightOutOfRange { height: f64, lo: f64, hi: f64 },

    #[error("{0} self-test check(s) failed")]
    SelfTest(usize),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the scattering, inverse and evolution pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("spectral singularity: |s11({z})| = {modulus:.3e}")]
    Singularity { z: Complex64, modulus: f64 },
    #[error("incomplete zero search: winding number {winding}, refined zeros {found}")]
    IncompleteSearch { winding: i64, found: usize },
    #[error("log branch failure: 1 - rho*rho_tilde = {value} at s = {s}")]
    LogBranch { s: Complex64, value: Complex64 },
    #[error("pole proximity: z = {z} within {distance:.3e} of {pole}")]
    Pole { z: Complex64, pole: Complex64, distance: f64 },
    #[error("degenerate configuration: condition number {cond:.3e}")]
    Degenerate { cond: f64 },
    #[error("unsupported topology: q_plus = {q_plus} differs from q_minus = {q_minus}")]
    Topology { q_minus: Complex64, q_plus: Complex64 },
    #[error("instability: max |q| = {max_modulus:.3e} at t = {t}")]
    Instability { max_modulus: f64, t: f64 },
    #[error("experiment design: window leaves the grid, maximal usable t = {t_max:.3}")]
    Design { t_max: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by malformed input rather than numerics.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json(_) | Error::Csv(_) | Error::Io(_))
    }
}

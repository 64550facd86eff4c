use thiserror::Error;

/// Errors produced by the wave-optics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field mismatch: {0}")]
    Mismatch(String),

    #[error("interval [{a}, {b}] lies outside the grid window [{x_min}, {x_max}]")]
    IntervalOutsideWindow { a: f64, b: f64, x_min: f64, x_max: f64 },

    #[error("aliasing: grid spacing {dx} exceeds the kernel Nyquist limit {limit}")]
    Aliasing { dx: f64, limit: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("field has zero norm on its window")]
    ZeroNorm,

    #[error("guard sweep found {maxima} local maxima; the objective is not unimodal on the bracket")]
    NotUnimodal { maxima: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

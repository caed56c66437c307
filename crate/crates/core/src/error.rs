use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state outside the admissible domain: {0}")]
    Domain(String),

    #[error("vacuum state encountered: {0}")]
    Vacuum(String),

    #[error("numerically singular matrix (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("incompatible grids: {0}")]
    Grid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solution blow-up: |v| = {magnitude:.3e} exceeds ceiling {ceiling:.3e} at t = {time}")]
    Blowup { magnitude: f64, ceiling: f64, time: f64 },

    #[error("gradient monitor tripped at t = {time}: {detail}")]
    Shock { time: f64, detail: String },

    #[error("entropy overflow along ray: fewer than two usable grid points")]
    Overflow,

    #[error("conjugate maximizer reached the search cap {cap:.3e}")]
    Cap { cap: f64 },

    #[error("no Gronwall rate c <= {cap:.3e} bounds the series")]
    Fit { cap: f64 },

    #[error("reference mass vanishes on every cell")]
    MaskedAll,
}

pub type Result<T> = std::result::Result<T, Error>;

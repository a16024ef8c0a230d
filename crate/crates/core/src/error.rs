use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition {parts:?}: {reason}")]
    InvalidPartition { parts: Vec<i64>, reason: &'static str },

    #[error("product diverges: |{a} * {b}| >= 1 at pair ({i}, {j})")]
    Divergence {
        i: usize,
        j: usize,
        a: Complex64,
        b: Complex64,
    },

    #[error("pole hit in {context}")]
    Pole { context: String },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("quadrature did not converge at {nodes} nodes: last {last}, previous {previous}")]
    NonConvergence {
        nodes: usize,
        last: Complex64,
        previous: Complex64,
    },

    #[error("pfaffian requires an even dimension, got {0}")]
    OddDimension(usize),

    #[error("coincident variables x[{i}] = x[{j}]")]
    Coincident { i: usize, j: usize },

    #[error("contour radius condition violated: {0}")]
    Radius(String),

    #[error("kernel asymmetry defect {defect:e} exceeds {limit:e}")]
    Asymmetry { defect: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

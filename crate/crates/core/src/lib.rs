pub mod cli;
pub mod error;
pub mod kernels;
pub mod macdonald;
pub mod measures;
pub mod partitions;
pub mod pfaffian;
pub mod quadrature;
pub mod symfunc;

pub use error::{Error, Result};

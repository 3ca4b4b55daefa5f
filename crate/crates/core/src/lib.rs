//! Sparse polynomial chaos expansion for resilience studies of power grids.

pub mod basis;
pub mod design;
pub mod distributions;
pub mod error;
pub mod grid;
pub mod harness;
pub mod postproc;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};

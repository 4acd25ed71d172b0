//! Verification engine for log-type ultra-analytic derivative bounds.

pub mod acceptance;
pub mod error;
pub mod holder;
pub mod kernels;
pub mod majorant;
pub mod multiindex;
pub mod numerics;
pub mod propagator;
pub mod report;
pub mod sharp_example;

pub use error::{Error, Result};

pub mod aggregation;
pub mod attacks;
pub mod cli;
pub mod data;
pub mod dp;
pub mod error;
pub mod fedsim;
pub mod metrics;
pub mod paramcore;
pub mod rng;

pub use error::{DataError, Error, Result};

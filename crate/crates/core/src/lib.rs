//! Quantitative Helly selection for finite families of half-spaces.

pub mod bounds;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod john;
pub mod selection;

pub use config::Tolerances;
pub use error::{Error, Result, Stage};

/// Library version string, recorded in certificates.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

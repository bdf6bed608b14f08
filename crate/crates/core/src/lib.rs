//! Numerical laboratory for fast-diffusion extinction dynamics on a 1D
//! Dirichlet interval: stationary profiles, weighted spectral analysis,
//! rescaled gradient-flow integration, and decay-rate experiments.

pub mod error;
pub mod grid;
pub mod functionals;
pub mod profiles;
pub mod spectrum;
pub mod flow;
pub mod fit;
pub mod experiments;
pub mod config;
pub mod report;

pub use error::{Error, Result};

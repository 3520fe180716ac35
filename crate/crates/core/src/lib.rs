//! Random Fourier feature kernel adaptive filters.
//!
//! Filters (RFF-KLMS, QKLMS, RFF-RLS), convergence predictors for RFF-KLMS,
//! synthetic data generators and a seeded Monte Carlo harness.

pub mod analysis;
pub mod datagen;
pub mod error;
pub mod filters;
pub mod harness;
pub mod kernel;
pub mod rng;

pub use error::{Error, Result};

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting checks
pub mod config;
pub mod error;
pub mod experiment;
pub mod hermite;
pub mod levy_measures;
pub mod mc;
pub mod noise;
pub mod quadrature;
pub mod solver;
pub mod stats;
pub mod validation;
pub mod vprocess;
pub mod wave_kernel;

pub use error::{Error, Result};

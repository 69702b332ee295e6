//! Spectral solvers for the small-amplitude, long-wave limit of the
//! one-dimensional Euler-Poisson system and its KdV description.

pub mod error;
pub mod fluid;
pub mod harness;
pub mod hierarchy;
pub mod kdv;
pub mod profile;
pub mod regime;
pub mod spectral;
pub mod timefd;

pub use error::{Error, Result};

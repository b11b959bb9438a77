//! Simulation and analysis toolkit for a five-qutrit superconducting
//! processor: native gates, pulse synthesis, noise and readout, tomography,
//! and scrambling-based teleportation.

// `!(x > 0.0)` style guards are kept so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
mod kernels;
pub mod noise;
pub mod qudit;
pub mod scrambling;
pub mod sim;
pub mod synthesis;
pub mod tomography;

pub use error::{Error, Result};

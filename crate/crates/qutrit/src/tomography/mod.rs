//! State and process tomography with Pauli-transfer-matrix metrics.

pub mod process;
pub mod state;

pub use process::*;
pub use state::*;

//! Decoherence channels, device parameters, readout and transmon formulas.

pub mod channel;
pub mod device;
pub mod readout;
pub mod transmon;

pub use channel::*;
pub use device::*;
pub use readout::*;
pub use transmon::*;

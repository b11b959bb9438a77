//! Scrambling unitaries, OTOCs and the teleportation experiment.

pub mod otoc;
pub mod teleport;

pub use otoc::*;
pub use teleport::*;

//! Native gate set and synthesis of entangling gates and decoupling
//! sequences from the cross-resonance and cross-Kerr interactions.

pub mod crosstalk;
pub mod decoupling;
pub mod entangling;
pub mod rotation;
pub mod schedule;

pub use crosstalk::*;
pub use decoupling::*;
pub use entangling::*;
pub use rotation::*;
pub use schedule::*;

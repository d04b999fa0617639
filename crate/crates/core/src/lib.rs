//! Exact stability theory for holomorphic extensions and a discrete solver for
//! the coupled vortex equations on a flat torus.

pub mod chamber;
pub mod stability;
pub mod torus;
pub mod vortex;

pub use stability::{rat, int, Rational};

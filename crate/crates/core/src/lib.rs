pub mod error;
pub mod field;
pub mod fractional;
pub mod grid;
pub mod kinetic;
pub mod levy;
pub mod par;
pub mod phase;
pub mod quadrature;
pub mod rng;
pub mod schrodinger;
pub mod series;
pub mod spectrum;

pub use error::{Error, Result};

//! Periodic Gaussian coherent states on the flat torus `T^n`, the toroidal
//! FBI transform and its tight-frame reconstruction, semiclassical
//! pseudodifferential operators, their spectra and spectral propagation.

pub mod cache;
pub mod coherent;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fbi;
pub mod grid;
pub mod harness;
pub mod quantize;
pub mod spectral;
pub mod symbol;

pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::{FourierField, TorusGrid};

/// Crate version, embedded in every output metadata block.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

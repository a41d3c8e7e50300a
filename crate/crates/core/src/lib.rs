//! Simulation and estimation toolkit for a rotation sensor made of two
//! coupled whispering-gallery resonators: a spinning one with gain and a
//! stationary one with loss.
//!
//! Frequencies and rates are dimensionless, in units of the passive
//! resonator's total decay rate. See [`params`] for the shared model.

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod estimate;
pub mod noise;
pub mod ode;
pub mod oracle;
pub mod params;
pub mod peaks;
pub mod sagnac;
pub mod spectrum;
pub mod steady;

pub use error::{Error, Result};
pub use params::{canonical_figure_params, Drive, Figure, SystemParams};

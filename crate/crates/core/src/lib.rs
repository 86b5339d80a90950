//! Simulation and energy-efficiency optimization of a satellite-to-ground
//! link assisted by several reconfigurable intelligent surfaces (RIS).
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: spherical-Earth coordinates and propagation distances.
//! - [`channel`]: path loss, complex direct/reflected signals, received power.
//! - [`energy`]: power consumption and energy efficiency.
//! - [`ideal_opt`]: co-phasing, selective diversity and binary PSO over
//!   element activation (deterministic losses).
//! - [`nie_opt`]: Adam ascent on Monte Carlo gradients of the expected
//!   efficiency under log-normal shadowing.
//! - [`harness`]: configuration, seeded experiments and CSV/JSON output.

pub mod channel;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod ideal_opt;
pub mod nie_opt;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::Scenario;

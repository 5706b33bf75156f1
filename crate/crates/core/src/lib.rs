//! Simulation and rate analysis for a Rydberg-blockade cold-atom-ensemble
//! quantum repeater.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! * [`mode`], [`ket`], [`state`]: the exact sparse state-vector engine over
//!   collective ensemble excitations and emitted photons.
//! * [`pulse`], [`protocol`]: the blockade-aware pulse interpreter and the
//!   built-in entanglement-preparation, remote-generation, swapping and
//!   teleportation protocols.
//! * [`script`]: the plain-text pulse script format.
//! * [`optics`]: the two-PBS / half-wave-plate Bell-state analyzer.
//! * [`emission`]: collective phase-matched emission from a sampled atom cloud.
//! * [`rates`]: closed-form and recursive mean protocol times.
//! * [`mc`]: a seeded Monte Carlo of the same retry processes.
//!
//! IO, file formats and the command-line front end live in the `repcli` crate.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod emission;
pub mod error;
pub mod ket;
pub mod mc;
pub mod mode;
pub mod optics;
pub mod protocol;
pub mod pulse;
pub mod rates;
pub mod script;
pub mod state;

mod float;

pub use error::{Error, Result};
pub use ket::{BasisKet, PhotonRecord};
pub use mode::{Level, ModeLabel, Polarization, Rail};
pub use num_complex::Complex64;
pub use state::StateVector;

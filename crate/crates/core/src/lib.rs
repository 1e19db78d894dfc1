//! Simulation and analysis core for a pulsed fiber photon-pair source:
//! efficiency budgets, a pulse-train Monte Carlo with coincidence counting,
//! two-photon polarization tomography and four-fold HOM interference.
//!
//! The crate is `no_std` with `alloc`; file formats, the CLI and thread pools
//! live in the `fiberpair` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod config;
pub mod counting;
pub mod error;
pub mod exec;
pub mod hom;
pub mod linalg;
pub mod math;
pub mod pairs;
pub mod polarization;
pub mod rng;
pub mod source;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};

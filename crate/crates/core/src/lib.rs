//! Memory-kernel master equations from measured collisional models.
//!
//! The crate builds quantum collisional models in which one ancilla of the
//! collision stream is measured at a probabilistically chosen step, extracts
//! the corresponding continuous-time generator and measurement channel, and
//! solves the resulting memory-kernel (post-Markovian) master equation in the
//! Laplace domain, with a direct time-domain integrator as a cross-check.

pub mod collision;
pub mod error;
pub mod experiments;
pub mod lindblad;
pub mod pmme;
pub mod qcore;

pub use error::{Error, Result};
pub use qcore::{ChoiMatrix, DensityMatrix, SuperoperatorMatrix, UnitaryMatrix};

//! Simulation laboratory for CT-derived flow estimation: pulsatile
//! ground-truth flow and contrast movies, dynamic fan-beam CT acquisition
//! with noise and pulsed-mode gating, filtered backprojection, and
//! physics-informed neural-field estimation trained in the image domain or
//! the sinogram domain, with a sweep harness for the accuracy studies.

pub mod ctsim;
pub mod error;
pub mod flowgen;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod pinn;
pub mod recon;
pub mod store;

pub use error::{CtflowError, Result};

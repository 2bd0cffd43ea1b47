//! Dynamic fan-beam CT acquisition: time-dependent line integrals,
//! Beer-Lambert attenuation, Poisson noise, pulsed-mode view gating.

pub mod cnr;
pub mod fanbeam;
pub mod noise;
pub mod project;
pub mod protocol;
pub mod sinogram;

pub use cnr::{calibrate_cnr, calibration_table, cnr_rois, i0_for_cnr, measure_cnr};
pub use fanbeam::FanBeamGeometry;
pub use noise::{add_poisson_noise, apply_beer_lambert, estimate_cnr, log_transform, noisy_sinogram};
pub use project::{forward_project_dynamic, static_movie};
pub use protocol::{pulse_mask, ScanProtocol, GRS_SWEEP_HZ, THETA0_SET_DEG};
pub use sinogram::{NoiseProvenance, Sinogram};

#[cfg(test)]
#[path = "project_tests.rs"]
mod project_tests;

//! The implicit neural flow field and its two training schemes: an
//! image-domain data loss against reconstructed movies, and a
//! sinogram-domain data loss with a time-dependent Radon rendering of the
//! predicted concentration.

pub mod loss;
pub mod net;
pub mod render;
pub mod sample;
pub mod train;

pub use loss::{
    loss_imageflow_data, loss_physics, loss_sinoflow_data, physics_residuals, ImagePoint,
    RenderRay,
};
pub use net::{AxisNorm, FieldNetwork, Normalization};
pub use render::{ray_quadrature, rays_for_sinogram, sinoflow_render, ConcentrationField, MovieField};
pub use sample::FieldDomain;
pub use train::{train, LossRecord, TrainConfig, TrainData, TrainMode, TrainOutcome};

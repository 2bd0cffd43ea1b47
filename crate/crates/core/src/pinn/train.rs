//! Adam training of the neural field under either data scheme.

use crate::ctsim::sinogram::Sinogram;
use crate::error::{CtflowError, Result};
use crate::flowgen::movie::FieldMovie;
use crate::pinn::loss::{
    loss_imageflow_grad, loss_physics_grad, loss_sinoflow_grad,
};
use crate::pinn::net::{FieldNetwork, ParamGrads};
use crate::pinn::render::rays_for_sinogram;
use crate::pinn::sample::FieldDomain;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainMode {
    ImageFlow,
    SinoFlow,
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainMode::ImageFlow => write!(f, "imageflow"),
            TrainMode::SinoFlow => write!(f, "sinoflow"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Image-domain data weight.
    pub lambda0: f64,
    /// Quadrature points per rendered ray; the sinogram data weight is
    /// 1 / n_p.
    pub n_p: usize,
    pub n_phys: usize,
    pub n_data: usize,
    pub n_rays: usize,
    pub reynolds: f64,
    pub seed: u64,
    /// Record the loss every this many iterations.
    pub loss_every: usize,
    /// Write a checkpoint every this many iterations (0 = only on abort).
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

impl TrainConfig {
    /// Full-scale configuration: 10 x 200 SiLU network, Adam at 1e-3 for
    /// 3e5 iterations, lambda0 = 1, n_p = 1600, Re = 1184.
    pub fn paper() -> Self {
        TrainConfig {
            hidden_layers: 10,
            width: 200,
            iterations: 300_000,
            learning_rate: 1e-3,
            lambda0: 1.0,
            n_p: 1600,
            n_phys: 4096,
            n_data: 4096,
            n_rays: 16,
            reynolds: 1184.0,
            seed: 0,
            loss_every: 100,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }

    /// Desk-scale profile for tests and sweeps on small grids.
    pub fn desk() -> Self {
        TrainConfig {
            hidden_layers: 6,
            width: 64,
            iterations: 20_000,
            learning_rate: 1e-3,
            lambda0: 1.0,
            n_p: 256,
            n_phys: 1024,
            n_data: 1024,
            n_rays: 16,
            reynolds: 1184.0,
            seed: 0,
            loss_every: 100,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }

    pub fn lambda1(&self) -> f64 {
        1.0 / self.n_p as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.width == 0 {
            return Err(CtflowError::Config("empty network".into()));
        }
        if self.n_p == 0 {
            return Err(CtflowError::Config("n_p must be positive".into()));
        }
        if self.n_phys == 0 {
            return Err(CtflowError::Config("physics batch must be non-empty".into()));
        }
        Ok(())
    }
}

/// Mode-specific training data.
pub enum TrainData<'a> {
    /// Image-domain scheme: fit the reconstructed movie.
    ImageFlow { recon: &'a FieldMovie },
    /// Sinogram-domain scheme: fit rendered line integrals.
    SinoFlow { sino: &'a Sinogram },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub l_physics: f64,
    pub l_data: f64,
    pub l_total: f64,
}

pub struct TrainOutcome {
    pub net: FieldNetwork,
    pub history: Vec<LossRecord>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: usize,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

fn flat_grads(g: &ParamGrads) -> Vec<f64> {
    let mut out = Vec::new();
    for l in &g.layers {
        out.extend(l.w.iter());
        out.extend(l.b.iter());
    }
    out
}

/// Train a fresh network on the given data with per-iteration resampled
/// batches. Deterministic under a fixed seed.
pub fn train(
    data: &TrainData,
    domain: &FieldDomain,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let norm = domain.normalization();
    let mut net = FieldNetwork::new(config.hidden_layers, config.width, norm, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut adam = Adam::new(net.n_params());
    let mut history = Vec::new();
    let mut initial_loss = f64::NAN;
    let mut divergent_run = 0usize;

    for iter in 0..config.iterations {
        let phys_points = domain.physics_batch(&mut rng, config.n_phys);
        let (l_phys, phys_grads) = loss_physics_grad(&net, &phys_points, config.reynolds)?;

        let (l_data, data_grads) = match data {
            TrainData::ImageFlow { recon } => {
                let batch = domain.imageflow_batch(&mut rng, config.n_data, recon);
                if config.lambda0 == 0.0 {
                    (0.0, None)
                } else {
                    let (l, g) = loss_imageflow_grad(&net, &batch, config.lambda0)?;
                    (l, Some(g))
                }
            }
            TrainData::SinoFlow { sino } => {
                let picks = domain.ray_picks(&mut rng, sino, config.n_rays);
                let rays = rays_for_sinogram(
                    sino,
                    &domain.mask,
                    domain.height_cm,
                    domain.time_scale_s,
                    &picks,
                    config.n_p,
                )?;
                let (l, g) = loss_sinoflow_grad(&net, &rays, config.n_p)?;
                (l, Some(g))
            }
        };

        let l_total = l_phys + l_data;
        if !l_total.is_finite() {
            if let Some(dir) = &config.checkpoint_dir {
                let _ = net.save_checkpoint(dir, iter);
            }
            return Err(CtflowError::TrainAbort {
                iter,
                reason: "non-finite loss".into(),
            });
        }
        if iter == 0 {
            initial_loss = l_total;
        }
        if l_total > 1e3 * initial_loss {
            divergent_run += 1;
            if divergent_run >= 1000 {
                if let Some(dir) = &config.checkpoint_dir {
                    let _ = net.save_checkpoint(dir, iter);
                }
                return Err(CtflowError::TrainAbort {
                    iter,
                    reason: format!("loss {l_total} above 1e3 x initial for 1000 iterations"),
                });
            }
        } else {
            divergent_run = 0;
        }

        if iter % config.loss_every == 0 || iter + 1 == config.iterations {
            history.push(LossRecord {
                iteration: iter,
                l_physics: l_phys,
                l_data,
                l_total,
            });
        }
        if config.checkpoint_every > 0 && iter > 0 && iter % config.checkpoint_every == 0 {
            if let Some(dir) = &config.checkpoint_dir {
                net.save_checkpoint(dir, iter)?;
            }
        }

        let mut grads = flat_grads(&phys_grads);
        if let Some(dg) = data_grads {
            for (a, b) in grads.iter_mut().zip(flat_grads(&dg)) {
                *a += b;
            }
        }
        let mut params = net.flat_params();
        adam.step(&mut params, &grads, config.learning_rate);
        net.set_flat_params(&params)?;
    }
    if let Some(dir) = &config.checkpoint_dir {
        net.save_checkpoint(dir, config.iterations)?;
    }
    Ok(TrainOutcome { net, history })
}

/// Write the loss history as CSV (iteration, L_physics, L_data, L_total).
pub fn write_loss_history(path: &std::path::Path, history: &[LossRecord]) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path).map_err(|e| CtflowError::StoreIo {
        path: path.to_path_buf(),
        source: e,
    })?;
    writeln!(f, "iteration,l_physics,l_data,l_total").map_err(|e| CtflowError::StoreIo {
        path: path.to_path_buf(),
        source: e,
    })?;
    for r in history {
        writeln!(f, "{},{},{},{}", r.iteration, r.l_physics, r.l_data, r.l_total).map_err(|e| {
            CtflowError::StoreIo {
                path: path.to_path_buf(),
                source: e,
            }
        })?;
    }
    Ok(())
}

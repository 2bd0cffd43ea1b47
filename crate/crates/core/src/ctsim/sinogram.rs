//! Per-view line-integral data with gantry angles, absolute times, pulse
//! mask and noise provenance.

use crate::ctsim::fanbeam::FanBeamGeometry;
use crate::ctsim::protocol::ScanProtocol;
use crate::error::{CtflowError, Result};
use crate::store;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseProvenance {
    NoiseFree,
    Poisson { i0: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct Sinogram {
    pub geom: FanBeamGeometry,
    pub protocol: ScanProtocol,
    /// Line integrals [concentration * cm], shape (n_views, n_channels),
    /// row-major. Masked-off views hold zeros and must not be read.
    pub g: Vec<f64>,
    /// Per-subray line integrals, shape (n_views, n_channels, subrays).
    /// Present when the projector keeps subray detail for the noise chain.
    pub g_subrays: Option<Vec<f32>>,
    /// Gantry angle per view [rad], theta0 + omega * t.
    pub view_angle: Vec<f64>,
    /// Absolute acquisition time per view [s].
    pub view_time: Vec<f64>,
    pub pulse_mask: Vec<bool>,
    pub noise: NoiseProvenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct SinogramMeta {
    geom: FanBeamGeometry,
    protocol: ScanProtocol,
    n_views: usize,
    n_channels: usize,
    has_subrays: bool,
    noise: NoiseProvenance,
}

impl Sinogram {
    pub fn n_views(&self) -> usize {
        self.view_time.len()
    }

    pub fn n_channels(&self) -> usize {
        self.geom.n_channels
    }

    /// Data row of one view, or None when the view is pulse-masked off.
    pub fn view_data(&self, v: usize) -> Option<&[f64]> {
        if self.pulse_mask[v] {
            let n = self.n_channels();
            Some(&self.g[v * n..(v + 1) * n])
        } else {
            None
        }
    }

    pub fn on_views(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_views()).filter(|&v| self.pulse_mask[v])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_views();
        if self.g.len() != n * self.n_channels() || self.view_angle.len() != n || self.pulse_mask.len() != n
        {
            return Err(CtflowError::Store("sinogram shape mismatch".into()));
        }
        let d_angle = 2.0 * std::f64::consts::PI / self.geom.views_per_rotation as f64;
        let dt = self.protocol.view_duration_s(self.geom.views_per_rotation);
        for v in 1..n {
            let da = self.view_angle[v] - self.view_angle[v - 1];
            if (da - d_angle).abs() > 1e-9 {
                return Err(CtflowError::Store(format!(
                    "view angle step {da} deviates from {d_angle}"
                )));
            }
            let dts = self.view_time[v] - self.view_time[v - 1];
            if (dts - dt).abs() > 1e-12 {
                return Err(CtflowError::Store("view time step mismatch".into()));
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        store::ensure_dir(dir)?;
        let meta = SinogramMeta {
            geom: self.geom,
            protocol: self.protocol,
            n_views: self.n_views(),
            n_channels: self.n_channels(),
            has_subrays: self.g_subrays.is_some(),
            noise: self.noise.clone(),
        };
        store::write_meta(dir, &meta)?;
        let g32: Vec<f32> = self.g.iter().map(|&x| x as f32).collect();
        store::write_f32(&dir.join("g.f32"), &g32)?;
        store::write_f64(&dir.join("angles.f64"), &self.view_angle)?;
        store::write_f64(&dir.join("times.f64"), &self.view_time)?;
        store::write_u8(
            &dir.join("pulse_mask.u8"),
            &self.pulse_mask.iter().map(|&b| b as u8).collect::<Vec<_>>(),
        )?;
        if let Some(sub) = &self.g_subrays {
            store::write_f32(&dir.join("g_sub.f32"), sub)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Sinogram> {
        let meta: SinogramMeta = store::read_meta(dir)?;
        let n = meta.n_views * meta.n_channels;
        let g = store::read_f32(&dir.join("g.f32"), n)?
            .into_iter()
            .map(|x| x as f64)
            .collect();
        let view_angle = store::read_f64(&dir.join("angles.f64"), meta.n_views)?;
        let view_time = store::read_f64(&dir.join("times.f64"), meta.n_views)?;
        let pulse_mask = store::read_u8(&dir.join("pulse_mask.u8"), meta.n_views)?
            .into_iter()
            .map(|b| b != 0)
            .collect();
        let g_subrays = if meta.has_subrays {
            Some(store::read_f32(
                &dir.join("g_sub.f32"),
                n * meta.geom.subrays_per_channel,
            )?)
        } else {
            None
        };
        let sino = Sinogram {
            geom: meta.geom,
            protocol: meta.protocol,
            g,
            g_subrays,
            view_angle,
            view_time,
            pulse_mask,
            noise: meta.noise,
        };
        sino.validate()?;
        Ok(sino)
    }

    /// Re-gate an acquired sinogram with a different pulse pattern: off
    /// views are flagged and their data zeroed. The protocol's pulse
    /// settings are replaced.
    pub fn with_pulse_gating(&self, pulse_width: usize, duty_cycle: f64) -> Result<Sinogram> {
        let mut protocol = self.protocol;
        protocol.pulse_width = Some(pulse_width);
        protocol.duty_cycle = duty_cycle;
        let mask = crate::ctsim::protocol::pulse_mask(&protocol, self.n_views())?;
        let nch = self.n_channels();
        let mut g = self.g.clone();
        let mut g_subrays = self.g_subrays.clone();
        for (v, &on) in mask.iter().enumerate() {
            if !on {
                g[v * nch..(v + 1) * nch].iter_mut().for_each(|x| *x = 0.0);
                if let Some(sub) = &mut g_subrays {
                    let m = self.geom.subrays_per_channel;
                    sub[v * nch * m..(v + 1) * nch * m]
                        .iter_mut()
                        .for_each(|x| *x = 0.0);
                }
            }
        }
        Ok(Sinogram {
            geom: self.geom,
            protocol,
            g,
            g_subrays,
            view_angle: self.view_angle.clone(),
            view_time: self.view_time.clone(),
            pulse_mask: mask,
            noise: self.noise.clone(),
        })
    }
}

//! Equiangular fan-beam filtered backprojection with the ramp
//! (Ramachandran-Lakshminarayanan) kernel.

use crate::ctsim::fanbeam::FanBeamGeometry;
use crate::ctsim::sinogram::Sinogram;
use crate::error::{CtflowError, Result};
use crate::flowgen::movie::FieldMovie;
use crate::geometry::RasterMask;
use crate::grid::GridSpec;
use ndarray::Array3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReconConfig {
    /// Views binned into one frame; defaults to a full rotation.
    pub views_per_frame: usize,
    pub grid: GridSpec,
}

impl ReconConfig {
    pub fn full_rotation(geom: &FanBeamGeometry, grid: GridSpec) -> Self {
        ReconConfig {
            views_per_frame: geom.views_per_rotation,
            grid,
        }
    }
}

/// Discrete ramp-filter taps for sample spacing `d`: h(0) = 1/(4 d^2),
/// h(n) = -1/(pi n d)^2 for odd n, 0 for even n. Symmetric and (in the
/// infinite limit) zero-mean.
pub fn ramlak_kernel(half_width: usize, d: f64) -> Vec<f64> {
    let mut h = vec![0.0; 2 * half_width + 1];
    let pi = std::f64::consts::PI;
    h[half_width] = 1.0 / (4.0 * d * d);
    for n in (1..=half_width).step_by(2) {
        let v = -1.0 / (pi * n as f64 * d).powi(2);
        h[half_width + n] = v;
        h[half_width - n] = v;
    }
    h
}

/// Equiangular fan-beam variant of the ramp kernel:
/// k(0) = 1/(8 dg^2), k(n odd) = -1/(2 (pi sin(n dg))^2), 0 for even n.
fn fan_kernel(half_width: usize, d_gamma: f64) -> Vec<f64> {
    let mut k = vec![0.0; 2 * half_width + 1];
    let pi = std::f64::consts::PI;
    k[half_width] = 1.0 / (8.0 * d_gamma * d_gamma);
    for n in (1..=half_width).step_by(2) {
        let v = -0.5 / (pi * (n as f64 * d_gamma).sin()).powi(2);
        k[half_width + n] = v;
        k[half_width - n] = v;
    }
    k
}

/// Reconstruct one frame from `views_per_frame` consecutive views.
///
/// `angles` and `rows` hold the per-view gantry angles and line-integral
/// rows (pulse-masked views enter as zeros). Output is in the same value
/// units as the sinogram divided by length (concentration).
pub fn fbp_reconstruct_frame(
    rows: &[&[f64]],
    angles: &[f64],
    geom: &FanBeamGeometry,
    config: &ReconConfig,
) -> Result<Vec<f32>> {
    geom.validate()?;
    if rows.len() != config.views_per_frame || angles.len() != rows.len() {
        return Err(CtflowError::Config(format!(
            "expected {} views per frame, got {}",
            config.views_per_frame,
            rows.len()
        )));
    }
    let nch = geom.n_channels;
    let dg = geom.channel_pitch_rad();
    let r = geom.source_to_iso_cm;
    let kernel = fan_kernel(nch, dg);

    // cosine pre-weighting and per-view convolution with the fan kernel
    let filtered: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|row| {
            let weighted: Vec<f64> = (0..nch)
                .map(|i| row[i] * r * geom.channel_gamma(i).cos())
                .collect();
            let mut q = vec![0.0; nch];
            for (i, qi) in q.iter_mut().enumerate() {
                // kernel index nch + i - j for j in 0..nch
                let acc: f64 = weighted
                    .iter()
                    .zip(kernel[i + 1..=i + nch].iter().rev())
                    .map(|(w, k)| w * k)
                    .sum();
                *qi = acc * dg;
            }
            q
        })
        .collect();

    let d_beta = 2.0 * std::f64::consts::PI / geom.views_per_rotation as f64;
    let grid = config.grid;
    let gamma0 = geom.channel_gamma(0);
    let inv_dg = 1.0 / dg;
    // per-view source position and fan basis, hoisted out of the pixel loop
    let view_frames: Vec<((f64, f64), (f64, f64), (f64, f64))> = angles
        .iter()
        .map(|&beta| (geom.source(beta), geom.fan_basis(beta).0, geom.fan_basis(beta).1))
        .collect();

    let image: Vec<f32> = (0..grid.ny)
        .into_par_iter()
        .flat_map_iter(|iy| {
            let y = grid.y_center(iy);
            let mut out_row = Vec::with_capacity(grid.nx);
            for ix in 0..grid.nx {
                let x = grid.x_center(ix);
                let mut acc = 0.0;
                for (q, &(s, e_c, e_t)) in filtered.iter().zip(&view_frames) {
                    let dx = x - s.0;
                    let dy = y - s.1;
                    let along = dx * e_c.0 + dy * e_c.1;
                    let across = dx * e_t.0 + dy * e_t.1;
                    let l2 = dx * dx + dy * dy;
                    let gamma = (across / along).atan();
                    // linear interpolation in gamma
                    let f = (gamma - gamma0) * inv_dg;
                    if f < 0.0 || f > (nch - 1) as f64 {
                        continue;
                    }
                    let i0 = f as usize;
                    let i1 = (i0 + 1).min(nch - 1);
                    let t = f - i0 as f64;
                    let qv = q[i0] + t * (q[i1] - q[i0]);
                    acc += qv / l2;
                }
                out_row.push((acc * d_beta) as f32);
            }
            out_row
        })
        .collect();
    Ok(image)
}

/// Reconstruct a movie: one frame per group of `views_per_frame`
/// consecutive views (one full rotation by default), timestamped at the
/// center of its rotation interval. Masked-off views are zero-filled.
///
/// Times are converted to nondimensional units with `u_c_cm_s` and
/// `height_cm`, which are also stored on the resulting movie.
pub fn reconstruct_movie(
    sino: &Sinogram,
    geom: &FanBeamGeometry,
    config: &ReconConfig,
    mask: &RasterMask,
    u_c_cm_s: f64,
    height_cm: f64,
) -> Result<FieldMovie> {
    let n_frames = sino.n_views() / config.views_per_frame;
    if n_frames == 0 {
        return Err(CtflowError::Config(
            "fewer views than views_per_frame".into(),
        ));
    }
    let nch = geom.n_channels;
    let (ny, nx) = (config.grid.ny, config.grid.nx);
    let time_scale = height_cm / u_c_cm_s;
    let mut c = Array3::<f32>::zeros((n_frames, ny, nx));
    let mut times = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let lo = k * config.views_per_frame;
        let hi = lo + config.views_per_frame;
        let rows: Vec<&[f64]> = (lo..hi).map(|v| &sino.g[v * nch..(v + 1) * nch]).collect();
        let angles = &sino.view_angle[lo..hi];
        let frame = fbp_reconstruct_frame(&rows, angles, geom, config)?;
        c.as_slice_mut().expect("layout")[k * ny * nx..(k + 1) * ny * nx]
            .copy_from_slice(&frame);
        let t_center = 0.5 * (sino.view_time[lo] + sino.view_time[hi - 1]);
        times.push(t_center / time_scale);
    }
    Ok(FieldMovie {
        grid: config.grid,
        times,
        c,
        u: Array3::zeros((n_frames, ny, nx)),
        v: Array3::zeros((n_frames, ny, nx)),
        p: Array3::zeros((n_frames, ny, nx)),
        mask: mask.clone(),
        u_c_cm_s,
        height_cm,
        provenance: "filtered backprojection reconstruction".into(),
        kind: crate::flowgen::movie::MovieKind::Reconstruction,
    })
}

#[cfg(test)]
mod tests;

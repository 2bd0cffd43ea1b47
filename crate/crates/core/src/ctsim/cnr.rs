//! Contrast-to-noise calibration: the mapping from incident intensity I0
//! to reconstructed-image CNR for the standard disk phantom.

use crate::ctsim::fanbeam::FanBeamGeometry;
use crate::ctsim::noise::{estimate_cnr, noisy_sinogram};
use crate::ctsim::project::{forward_project_dynamic, static_movie};
use crate::ctsim::protocol::ScanProtocol;
use crate::error::Result;
use crate::geometry::RasterMask;
use crate::grid::GridSpec;
use crate::recon::{fbp_reconstruct_frame, ReconConfig};

/// Calibration phantom: a 1 cm disk of unit concentration centered in the
/// field of view, matching scale of the vessel scenes.
pub const CNR_PHANTOM_RADIUS_CM: f64 = 1.0;

/// The measurement convention: lumen ROI is the disk interior minus a
/// 2-pixel rim; background is an annulus between 2 and 4 disk radii.
pub fn cnr_rois(grid: &GridSpec, radius_cm: f64) -> (Vec<usize>, Vec<usize>) {
    let rim = 2.0 * grid.pixel_cm;
    let mut lumen = Vec::new();
    let mut background = Vec::new();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let r = (grid.x_center(ix).powi(2) + grid.y_center(iy).powi(2)).sqrt();
            if r < radius_cm - rim {
                lumen.push(iy * grid.nx + ix);
            } else if r > 2.0 * radius_cm && r < 4.0 * radius_cm {
                background.push(iy * grid.nx + ix);
            }
        }
    }
    (lumen, background)
}

/// Measure the CNR at each incident intensity with the disk phantom: one
/// clean scan, then per intensity the Poisson chain, reconstruction and
/// the ROI measurement.
pub fn calibrate_cnr(
    geom: &FanBeamGeometry,
    grid: &GridSpec,
    i0_list: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut img = vec![0.0f32; grid.n_pixels()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let r = (grid.x_center(ix).powi(2) + grid.y_center(iy).powi(2)).sqrt();
            if r <= CNR_PHANTOM_RADIUS_CM {
                img[iy * grid.nx + ix] = 1.0;
            }
        }
    }
    let movie = static_movie(*grid, img, RasterMask::full(*grid));
    let mut protocol = ScanProtocol::continuous(4.0, 0.0, 1);
    protocol.noise_enabled = true;
    protocol.seed = seed;
    let clean = forward_project_dynamic(&movie, geom, &protocol)?;
    let config = ReconConfig::full_rotation(geom, *grid);
    let (lumen, bg) = cnr_rois(grid, CNR_PHANTOM_RADIUS_CM);
    let mut out = Vec::with_capacity(i0_list.len());
    for &i0 in i0_list {
        let mut sino = clean.clone();
        sino.protocol.i0 = i0;
        let noisy = noisy_sinogram(&sino)?;
        let rows: Vec<&[f64]> = (0..noisy.n_views())
            .map(|v| &noisy.g[v * geom.n_channels..(v + 1) * geom.n_channels])
            .collect();
        let image = fbp_reconstruct_frame(&rows, &noisy.view_angle, geom, &config)?;
        out.push((i0, estimate_cnr(&image, &lumen, &bg)?));
    }
    Ok(out)
}

/// CNR at a single incident intensity (see [`calibrate_cnr`]).
pub fn measure_cnr(geom: &FanBeamGeometry, grid: &GridSpec, i0: f64, seed: u64) -> Result<f64> {
    Ok(calibrate_cnr(geom, grid, &[i0], seed)?[0].1)
}

/// The I0 -> CNR calibration measured once with the paper-scale geometry
/// on a 512^2 grid (see `data/cnr_calibration.csv`). CNR grows with the
/// square root of the incident intensity, so lookups interpolate in
/// log(I0).
pub fn calibration_table() -> Vec<(f64, f64)> {
    let text = include_str!("../../data/cnr_calibration.csv");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| {
            let mut parts = l.split(',');
            let i0: f64 = parts.next().unwrap().trim().parse().unwrap();
            let cnr: f64 = parts.next().unwrap().trim().parse().unwrap();
            (i0, cnr)
        })
        .collect()
}

/// Incident intensity that produces the requested CNR under the
/// calibration convention (log-linear interpolation; clamps at the table
/// ends).
pub fn i0_for_cnr(target_cnr: f64) -> f64 {
    let table = calibration_table();
    if target_cnr <= table[0].1 {
        return table[0].0;
    }
    for w in table.windows(2) {
        let (i0a, ca) = w[0];
        let (i0b, cb) = w[1];
        if target_cnr <= cb {
            let t = (target_cnr - ca) / (cb - ca);
            return (i0a.ln() + t * (i0b.ln() - i0a.ln())).exp();
        }
    }
    table.last().unwrap().0
}

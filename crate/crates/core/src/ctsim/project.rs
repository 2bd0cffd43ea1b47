//! Time-dependent fan-beam forward projection of a concentration movie.

use crate::ctsim::fanbeam::{clip_to_rect, FanBeamGeometry};
use crate::ctsim::protocol::{pulse_mask, ScanProtocol};
use crate::ctsim::sinogram::{NoiseProvenance, Sinogram};
use crate::error::{CtflowError, Result};
use crate::flowgen::movie::FieldMovie;
use crate::grid::GridSpec;
use rayon::prelude::*;

/// Bilinear sampler over one blended frame; sample coordinates are clamped
/// to the pixel-center hull, matching [`GridSpec::bilinear`].
struct FrameSampler<'a> {
    data: &'a [f32],
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    inv_px: f64,
}

impl<'a> FrameSampler<'a> {
    fn new(grid: &GridSpec, data: &'a [f32]) -> Self {
        FrameSampler {
            data,
            nx: grid.nx,
            ny: grid.ny,
            x0: grid.x0,
            y0: grid.y0,
            inv_px: 1.0 / grid.pixel_cm,
        }
    }

    #[inline(always)]
    fn get(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.x0) * self.inv_px - 0.5;
        let fy = (y - self.y0) * self.inv_px - 0.5;
        let ix = (fx.floor().max(0.0) as usize).min(self.nx - 2);
        let iy = (fy.floor().max(0.0) as usize).min(self.ny - 2);
        let tx = (fx - ix as f64).clamp(0.0, 1.0);
        let ty = (fy - iy as f64).clamp(0.0, 1.0);
        let r0 = iy * self.nx + ix;
        let r1 = r0 + self.nx;
        let i00 = self.data[r0] as f64;
        let i01 = self.data[r0 + 1] as f64;
        let i10 = self.data[r1] as f64;
        let i11 = self.data[r1 + 1] as f64;
        let top = i00 + tx * (i01 - i00);
        let bot = i10 + tx * (i11 - i10);
        top + ty * (bot - top)
    }
}

/// Integrate one ray through a sampled frame with half-pixel stepping.
/// Returns the line integral in [value * cm].
#[inline]
fn integrate_ray(
    sampler: &FrameSampler,
    grid: &GridSpec,
    source: (f64, f64),
    dir: (f64, f64),
    step: f64,
) -> f64 {
    let span = match clip_to_rect(source, dir, grid.x0, grid.x_max(), grid.y0, grid.y_max()) {
        Some(s) => s,
        None => return 0.0,
    };
    let chord = span.1 - span.0;
    if chord <= 0.0 {
        return 0.0;
    }
    let n = (chord / step).ceil() as usize;
    let dl = chord / n as f64;
    let mut acc = 0.0;
    // midpoint rule
    let sx = source.0 + (span.0 + 0.5 * dl) * dir.0;
    let sy = source.1 + (span.0 + 0.5 * dl) * dir.1;
    let (dx, dy) = (dl * dir.0, dl * dir.1);
    let mut x = sx;
    let mut y = sy;
    for _ in 0..n {
        acc += sampler.get(x, y);
        x += dx;
        y += dy;
    }
    acc * dl
}

/// Simulate a dynamic fan-beam acquisition of the concentration movie.
///
/// Each on-view measures the movie at its own acquisition time (linear
/// interpolation between frames, bilinear in space); each channel averages
/// the line integrals of its subrays. Off-views carry zeros.
pub fn forward_project_dynamic(
    movie: &FieldMovie,
    geom: &FanBeamGeometry,
    protocol: &ScanProtocol,
) -> Result<Sinogram> {
    geom.validate()?;
    protocol.validate()?;
    let n_views = protocol.n_views(geom.views_per_rotation);
    let view_dt = protocol.view_duration_s(geom.views_per_rotation);
    let t_last = (n_views - 1) as f64 * view_dt;
    let movie_span = movie.span_s();
    // single-frame movies are static scenes with no window to exceed
    if movie.nt() > 1 && t_last > movie_span * (1.0 + 1e-9) {
        return Err(CtflowError::AcquisitionWindow {
            needed_s: t_last,
            available_s: movie_span,
        });
    }
    let mask = pulse_mask(protocol, n_views)?;
    let omega = protocol.omega_rad_s();
    let theta0 = protocol.theta0_deg.to_radians();
    let nch = geom.n_channels;
    let nsub = geom.subrays_per_channel;
    let step = movie.grid.pixel_cm / 2.0;
    let time_scale = movie.time_scale_s();
    let nyx = movie.grid.n_pixels();
    let c_all = movie.c.as_slice().expect("layout");

    let rows: Vec<(Vec<f64>, Vec<f32>)> = (0..n_views)
        .into_par_iter()
        .map(|v| {
            let mut g_row = vec![0.0f64; nch];
            let mut sub_row = vec![0.0f32; nch * nsub];
            if !mask[v] {
                return (g_row, sub_row);
            }
            let t_s = v as f64 * view_dt;
            let beta = theta0 + omega * t_s;
            // blend the two neighbouring frames at the view time
            let (lo, hi, w) = movie.frame_weights(t_s / time_scale);
            let blended: Vec<f32>;
            let frame: &[f32] = if lo == hi {
                &c_all[lo * nyx..(lo + 1) * nyx]
            } else {
                let a = &c_all[lo * nyx..(lo + 1) * nyx];
                let b = &c_all[hi * nyx..(hi + 1) * nyx];
                let wf = w as f32;
                blended = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| x + wf * (y - x))
                    .collect();
                &blended
            };
            let sampler = FrameSampler::new(&movie.grid, frame);
            let source = geom.source(beta);
            for i in 0..nch {
                let mut mean = 0.0;
                for j in 0..nsub {
                    let gamma = geom.subray_gamma(i, j);
                    let dir = geom.ray_direction(beta, gamma);
                    let val = integrate_ray(&sampler, &movie.grid, source, dir, step);
                    sub_row[i * nsub + j] = val as f32;
                    mean += val;
                }
                g_row[i] = mean / nsub as f64;
            }
            (g_row, sub_row)
        })
        .collect();

    let mut g = Vec::with_capacity(n_views * nch);
    let mut g_sub = Vec::with_capacity(n_views * nch * nsub);
    for (row, sub) in rows {
        g.extend_from_slice(&row);
        g_sub.extend_from_slice(&sub);
    }
    let view_time: Vec<f64> = (0..n_views).map(|v| v as f64 * view_dt).collect();
    let view_angle: Vec<f64> = view_time.iter().map(|&t| theta0 + omega * t).collect();

    Ok(Sinogram {
        geom: *geom,
        protocol: *protocol,
        g,
        g_subrays: Some(g_sub),
        view_angle,
        view_time,
        pulse_mask: mask,
        noise: NoiseProvenance::NoiseFree,
    })
}

/// A static single-frame "movie" wrapping one image, for phantom scans.
pub fn static_movie(grid: GridSpec, image: Vec<f32>, mask: crate::geometry::RasterMask) -> FieldMovie {
    use ndarray::Array3;
    let (ny, nx) = (grid.ny, grid.nx);
    FieldMovie {
        grid,
        times: vec![0.0],
        c: Array3::from_shape_vec((1, ny, nx), image).expect("shape"),
        u: Array3::zeros((1, ny, nx)),
        v: Array3::zeros((1, ny, nx)),
        p: Array3::zeros((1, ny, nx)),
        mask,
        u_c_cm_s: 30.0,
        height_cm: 1.5,
        provenance: "static phantom".into(),
        kind: crate::flowgen::movie::MovieKind::GroundTruth,
    }
}

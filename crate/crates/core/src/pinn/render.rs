//! Time-dependent Radon rendering of a concentration field along detector
//! rays, the hard acquisition constraint of sinogram-domain training.

use crate::ctsim::fanbeam::{clip_to_rect, FanBeamGeometry};
use crate::ctsim::sinogram::Sinogram;
use crate::error::Result;
use crate::flowgen::movie::{Field, FieldMovie};
use crate::geometry::RasterMask;
use crate::pinn::loss::RenderRay;
use crate::pinn::net::FieldNetwork;

/// A concentration field evaluable at nondimensional (t, x, y). Lengths are
/// nondimensionalized by the vessel height, times by height over u_c.
pub trait ConcentrationField {
    fn conc_at(&self, t: f64, x: f64, y: f64) -> f64;
}

/// Grid movies sample with linear time and bilinear space interpolation.
pub struct MovieField<'a> {
    pub movie: &'a FieldMovie,
}

impl ConcentrationField for MovieField<'_> {
    fn conc_at(&self, t: f64, x: f64, y: f64) -> f64 {
        let h = self.movie.height_cm;
        self.movie.sample(Field::C, t, x * h, y * h)
    }
}

impl ConcentrationField for FieldNetwork {
    fn conc_at(&self, t: f64, x: f64, y: f64) -> f64 {
        self.evaluate_fields(&[(t, x, y)])
            .map(|v| v[0][0])
            .unwrap_or(f64::NAN)
    }
}

/// Build the masked quadrature of one detector ray: `n_p` midpoint samples
/// along the ray's chord through the field of view, keeping those inside
/// the region-of-interest mask. Coordinates are nondimensional; the
/// measured value is filled by the caller.
#[allow(clippy::too_many_arguments)]
pub fn ray_quadrature(
    geom: &FanBeamGeometry,
    mask: &RasterMask,
    height_cm: f64,
    beta: f64,
    channel: usize,
    t_view_nd: f64,
    n_p: usize,
) -> RenderRay {
    let grid = &mask.grid;
    let source = geom.source(beta);
    let gamma = geom.channel_gamma(channel);
    let dir = geom.ray_direction(beta, gamma);
    let mut points = Vec::new();
    let mut dl = 0.0;
    if let Some((s0, s1)) = clip_to_rect(source, dir, grid.x0, grid.x_max(), grid.y0, grid.y_max())
    {
        let chord = s1 - s0;
        dl = chord / n_p as f64;
        for k in 0..n_p {
            let s = s0 + (k as f64 + 0.5) * dl;
            let x = source.0 + s * dir.0;
            let y = source.1 + s * dir.1;
            if let Some((iy, ix)) = grid.pixel_at(x, y) {
                if mask.roi_at(iy, ix) {
                    points.push((t_view_nd, x / height_cm, y / height_cm));
                }
            }
        }
    }
    RenderRay {
        points,
        dl_cm: dl,
        g_measured: 0.0,
    }
}

/// Midpoint-rule rendering of a ray with any concentration field.
pub fn sinoflow_render(field: &dyn ConcentrationField, ray: &RenderRay) -> f64 {
    ray.points
        .iter()
        .map(|&(t, x, y)| field.conc_at(t, x, y))
        .sum::<f64>()
        * ray.dl_cm
}

/// Quadrature for every requested (view, channel) of a sinogram, with the
/// measured line integrals attached.
pub fn rays_for_sinogram(
    sino: &Sinogram,
    mask: &RasterMask,
    height_cm: f64,
    time_scale_s: f64,
    picks: &[(usize, usize)],
    n_p: usize,
) -> Result<Vec<RenderRay>> {
    let mut out = Vec::with_capacity(picks.len());
    for &(v, ch) in picks {
        debug_assert!(sino.pulse_mask[v], "ray drawn from a masked-off view");
        let beta = sino.view_angle[v];
        let t_nd = sino.view_time[v] / time_scale_s;
        let mut ray = ray_quadrature(&sino.geom, mask, height_cm, beta, ch, t_nd, n_p);
        ray.g_measured = sino.g[v * sino.n_channels() + ch];
        out.push(ray);
    }
    Ok(out)
}

//! Self-contained ground truth: pulsatile channel flow with an advected
//! contrast bolus on an imaging grid.

use crate::error::Result;
use crate::flowgen::advect::{advect_weno3, AdvectDomain, AdvectOptions, VelocityField, CFL_LIMIT};
use crate::flowgen::movie::FieldMovie;
use crate::flowgen::womersley::{inlet_concentration, pressure, womersley_velocity, FlowParams};
use crate::geometry::{build_bifurcation_mask, RasterMask, VesselGeometry};
use crate::grid::GridSpec;
use ndarray::Array3;

/// Analytic channel velocity evaluated on the grid (u from the pulsatile
/// profile, v = 0). The profile only depends on the row, so each row is
/// evaluated once per sample time.
struct ChannelVelocity<'a> {
    params: &'a FlowParams,
    mask: &'a RasterMask,
    /// Nondimensional y per grid row, None when the row has no lumen.
    row_y: Vec<Option<f64>>,
}

impl<'a> ChannelVelocity<'a> {
    fn new(params: &'a FlowParams, mask: &'a RasterMask) -> Self {
        let grid = mask.grid;
        let mut row_y = vec![None; grid.ny];
        for iy in 0..grid.ny {
            if (0..grid.nx).any(|ix| mask.lumen[iy * grid.nx + ix]) {
                let (_, vy) = mask.to_vessel(0.0, grid.y_center(iy));
                row_y[iy] = Some((vy / params.height_cm).clamp(-0.5, 0.5));
            }
        }
        ChannelVelocity {
            params,
            mask,
            row_y,
        }
    }
}

impl VelocityField for ChannelVelocity<'_> {
    fn sample_into(&self, t: f64, u: &mut [f64], v: &mut [f64]) {
        let nx = self.mask.grid.nx;
        for (iy, ry) in self.row_y.iter().enumerate() {
            let u_row = ry
                .map(|y| womersley_velocity(y, t, self.params).expect("y in range"))
                .unwrap_or(0.0);
            for ix in 0..nx {
                let k = iy * nx + ix;
                u[k] = if self.mask.lumen[k] { u_row } else { 0.0 };
                v[k] = 0.0;
            }
        }
    }
    fn max_speed(&self) -> f64 {
        // peak velocity is normalized to ~1; small headroom for the search
        self.params.max_velocity_dense().max(1.0)
    }
}

/// Generate the channel-case ground-truth movie: analytic velocity and
/// pressure, WENO3-advected concentration with the oscillatory inlet trace.
///
/// `nt` frames span two pulsatile cycles.
pub fn synthesize_channel_case(
    params: &FlowParams,
    grid: &GridSpec,
    nt: usize,
) -> Result<FieldMovie> {
    let geom = VesselGeometry::channel(params.height_cm);
    let mask = build_bifurcation_mask(&geom, grid)?;
    let domain = AdvectDomain::from_mask(&mask, params.height_cm);

    let span = 2.0 * params.cycle_period();
    let frame_dt = span / (nt - 1) as f64;

    let vel = ChannelVelocity::new(params, &mask);
    // substep: CFL-limited, integer count per frame interval
    let dt_cfl = CFL_LIMIT * domain.dx / vel.max_speed();
    let per_frame = (frame_dt / dt_cfl).ceil() as usize;
    let dt = frame_dt / per_frame as f64;

    let c0 = vec![0.0; grid.n_pixels()];
    let inlet = |t: f64| inlet_concentration(t, params);
    let frames = advect_weno3(
        &c0,
        &vel,
        &domain,
        &inlet,
        &AdvectOptions {
            dt,
            n_steps: per_frame * (nt - 1),
            record_every: per_frame,
            clamp: Some((0.0, 1.0)),
            t0: 0.0,
        },
    )?;
    debug_assert_eq!(frames.len(), nt);

    let nyx = grid.n_pixels();
    let mut c = Array3::<f32>::zeros((nt, grid.ny, grid.nx));
    let mut u = Array3::<f32>::zeros((nt, grid.ny, grid.nx));
    let v = Array3::<f32>::zeros((nt, grid.ny, grid.nx));
    let mut p = Array3::<f32>::zeros((nt, grid.ny, grid.nx));
    let mut times = Vec::with_capacity(nt);
    let mut ubuf = vec![0.0; nyx];
    let mut vbuf = vec![0.0; nyx];
    for (k, (t, cf)) in frames.iter().enumerate() {
        times.push(*t);
        vel.sample_into(*t, &mut ubuf, &mut vbuf);
        let cs = c.as_slice_mut().expect("layout");
        let us = u.as_slice_mut().expect("layout");
        let ps = p.as_slice_mut().expect("layout");
        for j in 0..nyx {
            cs[k * nyx + j] = cf[j] as f32;
            us[k * nyx + j] = ubuf[j] as f32;
            if mask.lumen[j] {
                let (vx, _) = mask.to_vessel(grid.x_center(j % grid.nx), grid.y_center(j / grid.nx));
                ps[k * nyx + j] = pressure(vx / params.height_cm, *t, params) as f32;
            }
        }
    }

    let movie = FieldMovie {
        grid: *grid,
        times,
        c,
        u,
        v,
        p,
        mask,
        u_c_cm_s: params.u_c_cm_s,
        height_cm: params.height_cm,
        provenance: format!(
            "channel case: pulsatile profile Re={:.1} St={:.4} beta={}",
            params.reynolds(),
            params.strouhal(),
            params.beta
        ),
        kind: crate::flowgen::movie::MovieKind::GroundTruth,
    };
    movie.validate()?;
    Ok(movie)
}

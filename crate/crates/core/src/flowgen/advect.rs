//! Pure advection of a passive scalar with third-order WENO flux
//! reconstruction and SSP-RK3 time stepping on a masked raster domain.
//!
//! The conservative update runs dimension-by-dimension over contiguous
//! lumen segments. Segment ends are walls (zero normal flux), the inlet
//! plane (Dirichlet ghost values), outflow planes (zeroth-order
//! extrapolation) or periodic wraps.

use crate::error::{CtflowError, Result};
use crate::flowgen::movie::FieldMovie;
use crate::geometry::RasterMask;
use crate::grid::GridSpec;

pub const CFL_LIMIT: f64 = 0.3;
const WENO_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    Wall,
    Inlet,
    Outflow,
    Periodic,
}

#[derive(Debug, Clone)]
struct Segment {
    /// Row index for x-segments, column index for y-segments.
    line: usize,
    start: usize,
    len: usize,
    lo: EndKind,
    hi: EndKind,
}

/// Advection domain: the active cells and their 1D segment decomposition.
#[derive(Debug, Clone)]
pub struct AdvectDomain {
    pub grid: GridSpec,
    pub active: Vec<bool>,
    /// Nondimensional cell size (pixel / H).
    pub dx: f64,
    row_segments: Vec<Segment>,
    col_segments: Vec<Segment>,
    inlet_cells: Vec<usize>,
}

impl AdvectDomain {
    /// Build from a raster mask; active cells are the ROI. Cell size is
    /// expressed in units of `height_cm`.
    pub fn from_mask(mask: &RasterMask, height_cm: f64) -> Self {
        let grid = mask.grid;
        let active = mask.roi.clone();
        let inlet: Vec<usize> = mask
            .inlet_cells
            .iter()
            .map(|&(iy, ix)| iy * grid.nx + ix)
            .collect();
        let outlet: Vec<usize> = mask
            .outlet_cells
            .iter()
            .map(|&(iy, ix)| iy * grid.nx + ix)
            .collect();
        let is_inlet = |k: usize| inlet.contains(&k);
        let is_outlet = |k: usize| outlet.contains(&k);

        let mut row_segments = Vec::new();
        for iy in 0..grid.ny {
            let mut ix = 0;
            while ix < grid.nx {
                if !active[iy * grid.nx + ix] {
                    ix += 1;
                    continue;
                }
                let start = ix;
                while ix < grid.nx && active[iy * grid.nx + ix] {
                    ix += 1;
                }
                let len = ix - start;
                let k0 = iy * grid.nx + start;
                let k1 = iy * grid.nx + (ix - 1);
                let lo = if is_inlet(k0) {
                    EndKind::Inlet
                } else if is_outlet(k0) {
                    EndKind::Outflow
                } else {
                    EndKind::Wall
                };
                let hi = if is_outlet(k1) {
                    EndKind::Outflow
                } else if is_inlet(k1) {
                    EndKind::Inlet
                } else {
                    EndKind::Wall
                };
                row_segments.push(Segment {
                    line: iy,
                    start,
                    len,
                    lo,
                    hi,
                });
            }
        }
        let mut col_segments = Vec::new();
        for ix in 0..grid.nx {
            let mut iy = 0;
            while iy < grid.ny {
                if !active[iy * grid.nx + ix] {
                    iy += 1;
                    continue;
                }
                let start = iy;
                while iy < grid.ny && active[iy * grid.nx + ix] {
                    iy += 1;
                }
                let len = iy - start;
                let k0 = start * grid.nx + ix;
                let k1 = (iy - 1) * grid.nx + ix;
                let lo = if is_outlet(k0) {
                    EndKind::Outflow
                } else {
                    EndKind::Wall
                };
                let hi = if is_outlet(k1) {
                    EndKind::Outflow
                } else {
                    EndKind::Wall
                };
                col_segments.push(Segment {
                    line: ix,
                    start,
                    len,
                    lo,
                    hi,
                });
            }
        }
        AdvectDomain {
            grid,
            active,
            dx: grid.pixel_cm / height_cm,
            row_segments,
            col_segments,
            inlet_cells: inlet,
        }
    }

    /// Fully periodic rectangular domain (verification configurations).
    pub fn periodic(grid: GridSpec, height_cm: f64) -> Self {
        let active = vec![true; grid.n_pixels()];
        let row_segments = (0..grid.ny)
            .map(|iy| Segment {
                line: iy,
                start: 0,
                len: grid.nx,
                lo: EndKind::Periodic,
                hi: EndKind::Periodic,
            })
            .collect();
        let col_segments = (0..grid.nx)
            .map(|ix| Segment {
                line: ix,
                start: 0,
                len: grid.ny,
                lo: EndKind::Periodic,
                hi: EndKind::Periodic,
            })
            .collect();
        AdvectDomain {
            grid,
            active,
            dx: grid.pixel_cm / height_cm,
            row_segments,
            col_segments,
            inlet_cells: Vec::new(),
        }
    }

    pub fn total_mass(&self, c: &[f64]) -> f64 {
        let area = self.dx * self.dx;
        self.active
            .iter()
            .zip(c)
            .filter(|(a, _)| **a)
            .map(|(_, v)| v * area)
            .sum()
    }
}

/// Velocity source sampled at arbitrary times on the advection grid.
pub trait VelocityField {
    /// Fill nondimensional (u, v) on the full grid at nondimensional time t.
    fn sample_into(&self, t: f64, u: &mut [f64], v: &mut [f64]);
    /// Largest |velocity| over the simulated window (for the CFL check).
    fn max_speed(&self) -> f64;
}

impl VelocityField for FieldMovie {
    fn sample_into(&self, t: f64, u: &mut [f64], v: &mut [f64]) {
        let (lo, hi, w) = self.frame_weights(t);
        let nyx = self.grid.n_pixels();
        let us = self.u.as_slice().expect("layout");
        let vs = self.v.as_slice().expect("layout");
        let (alo, ahi) = (&us[lo * nyx..(lo + 1) * nyx], &us[hi * nyx..(hi + 1) * nyx]);
        let (blo, bhi) = (&vs[lo * nyx..(lo + 1) * nyx], &vs[hi * nyx..(hi + 1) * nyx]);
        for j in 0..nyx {
            u[j] = alo[j] as f64 * (1.0 - w) + ahi[j] as f64 * w;
            v[j] = blo[j] as f64 * (1.0 - w) + bhi[j] as f64 * w;
        }
    }

    fn max_speed(&self) -> f64 {
        let mut m = 0.0f64;
        for &x in self.u.iter().chain(self.v.iter()) {
            m = m.max((x as f64).abs());
        }
        m
    }
}

pub struct AdvectOptions {
    /// Nondimensional substep.
    pub dt: f64,
    pub n_steps: usize,
    /// Record a frame every this many steps (step 0 is always recorded).
    pub record_every: usize,
    /// Optional hard bounds enforced after each step (maximum-principle
    /// clip for underresolved fronts).
    pub clamp: Option<(f64, f64)>,
    /// Start time of the integration (nondimensional).
    pub t0: f64,
}

/// WENO3 reconstruction of the face value at i+1/2 from the left, given
/// (f_{i-1}, f_i, f_{i+1}).
#[inline]
fn weno3_left(fm: f64, f0: f64, fp: f64) -> f64 {
    let p0 = -0.5 * fm + 1.5 * f0;
    let p1 = 0.5 * f0 + 0.5 * fp;
    let b0 = (f0 - fm) * (f0 - fm);
    let b1 = (fp - f0) * (fp - f0);
    let a0 = (1.0 / 3.0) / ((WENO_EPS + b0) * (WENO_EPS + b0));
    let a1 = (2.0 / 3.0) / ((WENO_EPS + b1) * (WENO_EPS + b1));
    (a0 * p0 + a1 * p1) / (a0 + a1)
}

/// 1D WENO3 Lax-Friedrichs flux divergence along one segment.
///
/// `c` and `vel` hold the segment values plus 2 ghost cells on each side
/// (length len + 4). Fluxes at the two boundary faces are overridden
/// according to the end kinds. Writes -d(f)/dx into `out` (length len).
fn segment_divergence(
    c: &[f64],
    vel: &[f64],
    lo: EndKind,
    hi: EndKind,
    dx: f64,
    out: &mut [f64],
) {
    let n = out.len();
    debug_assert_eq!(c.len(), n + 4);
    let alpha = vel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // face fluxes at i-1/2 for i in 0..=n (faces 0..n inclusive), ghost
    // indexing: cell i of the segment is c[i+2].
    let mut flux = vec![0.0; n + 1];
    for (face, fl) in flux.iter_mut().enumerate() {
        // face between cells (face-1) and face, segment indexing
        let idx = face + 2; // ghost index of the right cell
        // split fluxes f± = (u c ± alpha c)/2 over the 4-cell neighborhood
        let fp = |j: usize| 0.5 * (vel[j] * c[j] + alpha * c[j]);
        let fm = |j: usize| 0.5 * (vel[j] * c[j] - alpha * c[j]);
        // left-biased reconstruction of f+ at the face: stencil centered on
        // the left cell (idx-1)
        let plus = weno3_left(fp(idx - 2), fp(idx - 1), fp(idx));
        // right-biased reconstruction of f- at the face (mirror image)
        let minus = weno3_left(fm(idx + 1), fm(idx), fm(idx - 1));
        *fl = plus + minus;
    }
    if lo == EndKind::Wall {
        flux[0] = 0.0;
    }
    if hi == EndKind::Wall {
        flux[n] = 0.0;
    }
    for i in 0..n {
        out[i] = -(flux[i + 1] - flux[i]) / dx;
    }
}

/// Fill segment + ghost arrays from the full-grid fields.
#[allow(clippy::too_many_arguments)]
fn gather_segment(
    seg: &Segment,
    horizontal: bool,
    nx: usize,
    c: &[f64],
    vel: &[f64],
    inlet_value: f64,
    cbuf: &mut Vec<f64>,
    vbuf: &mut Vec<f64>,
) {
    let n = seg.len;
    cbuf.clear();
    vbuf.clear();
    cbuf.resize(n + 4, 0.0);
    vbuf.resize(n + 4, 0.0);
    let at = |i: usize| -> usize {
        if horizontal {
            seg.line * nx + (seg.start + i)
        } else {
            (seg.start + i) * nx + seg.line
        }
    };
    for i in 0..n {
        cbuf[i + 2] = c[at(i)];
        vbuf[i + 2] = vel[at(i)];
    }
    // ghosts
    let fill = |kind: EndKind, side_lo: bool, cbuf: &mut [f64], vbuf: &mut [f64]| {
        let (g0, g1, edge, inner) = if side_lo {
            (1usize, 0usize, 2usize, 3usize)
        } else {
            (n + 2, n + 3, n + 1, n)
        };
        let _ = inner;
        match kind {
            EndKind::Wall | EndKind::Outflow => {
                cbuf[g0] = cbuf[edge];
                cbuf[g1] = cbuf[edge];
                vbuf[g0] = vbuf[edge];
                vbuf[g1] = vbuf[edge];
            }
            EndKind::Inlet => {
                cbuf[g0] = inlet_value;
                cbuf[g1] = inlet_value;
                vbuf[g0] = vbuf[edge];
                vbuf[g1] = vbuf[edge];
            }
            EndKind::Periodic => {
                if side_lo {
                    cbuf[1] = cbuf[n + 1];
                    cbuf[0] = cbuf[n];
                    vbuf[1] = vbuf[n + 1];
                    vbuf[0] = vbuf[n];
                } else {
                    cbuf[n + 2] = cbuf[2];
                    cbuf[n + 3] = cbuf[3];
                    vbuf[n + 2] = vbuf[2];
                    vbuf[n + 3] = vbuf[3];
                }
            }
        }
    };
    fill(seg.lo, true, cbuf, vbuf);
    fill(seg.hi, false, cbuf, vbuf);
}

fn rhs(
    domain: &AdvectDomain,
    c: &[f64],
    u: &[f64],
    v: &[f64],
    inlet_value: f64,
    out: &mut [f64],
) {
    let nx = domain.grid.nx;
    out.iter_mut().for_each(|x| *x = 0.0);
    let mut cbuf = Vec::new();
    let mut vbuf = Vec::new();
    let mut div = Vec::new();
    for seg in &domain.row_segments {
        gather_segment(seg, true, nx, c, u, inlet_value, &mut cbuf, &mut vbuf);
        div.clear();
        div.resize(seg.len, 0.0);
        segment_divergence(&cbuf, &vbuf, seg.lo, seg.hi, domain.dx, &mut div);
        for i in 0..seg.len {
            out[seg.line * nx + seg.start + i] += div[i];
        }
    }
    for seg in &domain.col_segments {
        gather_segment(seg, false, nx, c, v, inlet_value, &mut cbuf, &mut vbuf);
        div.clear();
        div.resize(seg.len, 0.0);
        segment_divergence(&cbuf, &vbuf, seg.lo, seg.hi, domain.dx, &mut div);
        for i in 0..seg.len {
            out[(seg.start + i) * nx + seg.line] += div[i];
        }
    }
}

fn pin_inlet(domain: &AdvectDomain, c: &mut [f64], value: f64) {
    for &k in &domain.inlet_cells {
        c[k] = value;
    }
}

/// Advance `c_init` through `n_steps` SSP-RK3 steps of the advection
/// equation dc/dt + div(u c) = 0, returning the recorded frames as
/// (time, field) pairs.
pub fn advect_weno3(
    c_init: &[f64],
    velocity: &dyn VelocityField,
    domain: &AdvectDomain,
    inlet_bc: &dyn Fn(f64) -> f64,
    opts: &AdvectOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = domain.grid.n_pixels();
    if c_init.len() != n {
        return Err(CtflowError::Config(format!(
            "c_init length {} does not match grid {}",
            c_init.len(),
            n
        )));
    }
    let vmax = velocity.max_speed();
    if !vmax.is_finite() {
        return Err(CtflowError::NonFinite("velocity field".into()));
    }
    let cfl = vmax * opts.dt / domain.dx;
    if cfl > CFL_LIMIT + 1e-12 {
        return Err(CtflowError::CflViolation {
            cfl,
            limit: CFL_LIMIT,
        });
    }

    let mut c: Vec<f64> = c_init.to_vec();
    pin_inlet(domain, &mut c, inlet_bc(opts.t0));
    let mut frames = Vec::new();
    frames.push((opts.t0, c.clone()));

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut c1 = vec![0.0; n];
    let mut c2 = vec![0.0; n];

    for step in 0..opts.n_steps {
        let t = opts.t0 + step as f64 * opts.dt;
        let dt = opts.dt;

        // stage 1 at t
        velocity.sample_into(t, &mut u, &mut v);
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(CtflowError::NonFinite("velocity sample".into()));
        }
        rhs(domain, &c, &u, &v, inlet_bc(t), &mut k1);
        for j in 0..n {
            c1[j] = c[j] + dt * k1[j];
        }
        pin_inlet(domain, &mut c1, inlet_bc(t + dt));

        // stage 2 at t + dt
        velocity.sample_into(t + dt, &mut u, &mut v);
        rhs(domain, &c1, &u, &v, inlet_bc(t + dt), &mut k1);
        for j in 0..n {
            c2[j] = 0.75 * c[j] + 0.25 * (c1[j] + dt * k1[j]);
        }
        pin_inlet(domain, &mut c2, inlet_bc(t + 0.5 * dt));

        // stage 3 at t + dt/2
        velocity.sample_into(t + 0.5 * dt, &mut u, &mut v);
        rhs(domain, &c2, &u, &v, inlet_bc(t + 0.5 * dt), &mut k1);
        for j in 0..n {
            c[j] = c[j] / 3.0 + 2.0 / 3.0 * (c2[j] + dt * k1[j]);
        }
        let t_next = t + dt;
        pin_inlet(domain, &mut c, inlet_bc(t_next));
        if let Some((lo, hi)) = opts.clamp {
            for (j, val) in c.iter_mut().enumerate() {
                if domain.active[j] {
                    *val = val.clamp(lo, hi);
                }
            }
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(CtflowError::NonFinite(format!("concentration at step {step}")));
        }
        if (step + 1) % opts.record_every == 0 {
            frames.push((t_next, c.clone()));
        }
    }
    Ok(frames)
}

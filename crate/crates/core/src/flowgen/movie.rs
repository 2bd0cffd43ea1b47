//! Time-resolved gridded fields (c, u, v, p) with nondimensionalization
//! constants. This is both the ground truth and the evaluation target.

use crate::error::{CtflowError, Result};
use crate::geometry::RasterMask;
use crate::grid::GridSpec;
use crate::store;
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Bound slack tolerated on the advected scalar.
pub const CONC_EPS: f64 = 1e-6;

/// Ground-truth movies carry an advected scalar bounded by the inlet range;
/// reconstructions may legitimately overshoot those bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MovieKind {
    GroundTruth,
    Reconstruction,
}

#[derive(Debug, Clone)]
pub struct FieldMovie {
    pub grid: GridSpec,
    /// Frame times, nondimensional, strictly increasing.
    pub times: Vec<f64>,
    /// Concentration per frame, shape (nt, ny, nx).
    pub c: Array3<f32>,
    /// Streamwise velocity (nondimensional by u_c).
    pub u: Array3<f32>,
    /// Transverse velocity.
    pub v: Array3<f32>,
    /// Pressure (nondimensional).
    pub p: Array3<f32>,
    pub mask: RasterMask,
    /// Characteristic velocity [cm/s] for unit conversion.
    pub u_c_cm_s: f64,
    /// Channel height H [cm], the length scale.
    pub height_cm: f64,
    pub provenance: String,
    pub kind: MovieKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct MovieMeta {
    grid: GridSpec,
    times: Vec<f64>,
    u_c_cm_s: f64,
    height_cm: f64,
    provenance: String,
    mask_offset: (f64, f64),
    inlet_cells: Vec<(usize, usize)>,
    outlet_cells: Vec<(usize, usize)>,
    fields: Vec<String>,
    #[serde(default = "default_kind")]
    kind: MovieKind,
}

fn default_kind() -> MovieKind {
    MovieKind::GroundTruth
}

impl FieldMovie {
    pub fn nt(&self) -> usize {
        self.times.len()
    }

    /// Seconds per nondimensional time unit.
    pub fn time_scale_s(&self) -> f64 {
        self.height_cm / self.u_c_cm_s
    }

    /// Total simulated span in seconds.
    pub fn span_s(&self) -> f64 {
        (self.times[self.nt() - 1] - self.times[0]) * self.time_scale_s()
    }

    /// Indices and weight for linear interpolation at nondimensional `t`.
    /// Clamps outside the covered span.
    pub fn frame_weights(&self, t: f64) -> (usize, usize, f64) {
        let times = &self.times;
        if t <= times[0] {
            return (0, 0, 0.0);
        }
        let n = times.len();
        if t >= times[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let mut hi = times.partition_point(|&x| x < t).max(1);
        if hi >= n {
            hi = n - 1;
        }
        let lo = hi - 1;
        let w = (t - times[lo]) / (times[hi] - times[lo]);
        (lo, hi, w)
    }

    /// Index of the frame nearest in time to nondimensional `t`.
    pub fn nearest_frame(&self, t: f64) -> usize {
        let (lo, hi, w) = self.frame_weights(t);
        if w < 0.5 {
            lo
        } else {
            hi
        }
    }

    fn frame_slice(field: &Array3<f32>, k: usize) -> &[f32] {
        let nyx = field.shape()[1] * field.shape()[2];
        &field.as_slice().expect("standard layout")[k * nyx..(k + 1) * nyx]
    }

    /// Sample a field with linear interpolation in time and bilinear in
    /// space. `which` selects c, u, v or p.
    pub fn sample(&self, which: Field, t: f64, x: f64, y: f64) -> f64 {
        let arr = self.field(which);
        let (lo, hi, w) = self.frame_weights(t);
        let a = self.grid.bilinear(Self::frame_slice(arr, lo), x, y);
        if lo == hi {
            return a;
        }
        let b = self.grid.bilinear(Self::frame_slice(arr, hi), x, y);
        a * (1.0 - w) + b * w
    }

    pub fn field(&self, which: Field) -> &Array3<f32> {
        match which {
            Field::C => &self.c,
            Field::U => &self.u,
            Field::V => &self.v,
            Field::P => &self.p,
        }
    }

    /// Raw frame as a flat slice (row-major).
    pub fn frame(&self, which: Field, k: usize) -> &[f32] {
        Self::frame_slice(self.field(which), k)
    }

    /// Enforce the movie invariants: monotone times, shapes consistent,
    /// c within [-eps, 1+eps], velocities zero outside the lumen.
    pub fn validate(&self) -> Result<()> {
        let nt = self.nt();
        if nt == 0 {
            return Err(CtflowError::Store("movie has no frames".into()));
        }
        for w in self.times.windows(2) {
            if w[1] <= w[0] {
                return Err(CtflowError::Store("non-monotonic frame times".into()));
            }
        }
        let shape = [nt, self.grid.ny, self.grid.nx];
        for (name, f) in [("c", &self.c), ("u", &self.u), ("v", &self.v), ("p", &self.p)] {
            if f.shape() != shape {
                return Err(CtflowError::Store(format!(
                    "field {name} shape {:?} does not match {:?}",
                    f.shape(),
                    shape
                )));
            }
        }
        if self.kind == MovieKind::GroundTruth {
            for &v in self.c.iter() {
                let v = v as f64;
                if !(-CONC_EPS..=1.0 + CONC_EPS).contains(&v) {
                    return Err(CtflowError::Store(format!(
                        "concentration {v} outside [0, 1] + {CONC_EPS}"
                    )));
                }
            }
        }
        let nyx = self.grid.n_pixels();
        let (us, vs) = (
            self.u.as_slice().expect("layout"),
            self.v.as_slice().expect("layout"),
        );
        for k in 0..nt {
            for j in 0..nyx {
                if !self.mask.lumen[j] {
                    let (a, b) = (us[k * nyx + j], vs[k * nyx + j]);
                    if a != 0.0 || b != 0.0 {
                        return Err(CtflowError::Store(
                            "nonzero velocity outside lumen".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Persist to an artifact-store directory.
    pub fn save(&self, dir: &Path) -> Result<()> {
        store::ensure_dir(dir)?;
        let meta = MovieMeta {
            grid: self.grid,
            times: self.times.clone(),
            u_c_cm_s: self.u_c_cm_s,
            height_cm: self.height_cm,
            provenance: self.provenance.clone(),
            mask_offset: self.mask.offset,
            inlet_cells: self.mask.inlet_cells.clone(),
            outlet_cells: self.mask.outlet_cells.clone(),
            fields: vec!["c".into(), "u".into(), "v".into(), "p".into()],
            kind: self.kind,
        };
        store::write_meta(dir, &meta)?;
        for (name, f) in [("c", &self.c), ("u", &self.u), ("v", &self.v), ("p", &self.p)] {
            store::write_f32(
                &dir.join(format!("{name}.f32")),
                f.as_slice().expect("layout"),
            )?;
        }
        store::write_u8(&dir.join("lumen.u8"), &self.mask.lumen_u8())?;
        store::write_u8(&dir.join("roi.u8"), &self.mask.roi_u8())?;
        Ok(())
    }

    /// Load and validate a movie from an artifact-store directory.
    /// Velocities are masked to the lumen on load.
    pub fn load(dir: &Path) -> Result<FieldMovie> {
        let meta: MovieMeta = store::read_meta(dir)?;
        let nt = meta.times.len();
        let (ny, nx) = (meta.grid.ny, meta.grid.nx);
        let n = nt * ny * nx;
        let read = |name: &str| -> Result<Array3<f32>> {
            let raw = store::read_f32(&dir.join(format!("{name}.f32")), n)?;
            Array3::from_shape_vec((nt, ny, nx), raw)
                .map_err(|e| CtflowError::Store(format!("field {name}: {e}")))
        };
        let c = read("c")?;
        let mut u = read("u")?;
        let mut v = read("v")?;
        let p = read("p")?;
        let lumen: Vec<bool> = store::read_u8(&dir.join("lumen.u8"), ny * nx)?
            .into_iter()
            .map(|b| b != 0)
            .collect();
        let roi: Vec<bool> = store::read_u8(&dir.join("roi.u8"), ny * nx)?
            .into_iter()
            .map(|b| b != 0)
            .collect();
        let mask = RasterMask {
            grid: meta.grid,
            lumen,
            roi,
            offset: meta.mask_offset,
            inlet_cells: meta.inlet_cells,
            outlet_cells: meta.outlet_cells,
        };
        let nyx = ny * nx;
        for k in 0..nt {
            for j in 0..nyx {
                if !mask.lumen[j] {
                    u.as_slice_mut().expect("layout")[k * nyx + j] = 0.0;
                    v.as_slice_mut().expect("layout")[k * nyx + j] = 0.0;
                }
            }
        }
        let movie = FieldMovie {
            grid: meta.grid,
            times: meta.times,
            c,
            u,
            v,
            p,
            mask,
            u_c_cm_s: meta.u_c_cm_s,
            height_cm: meta.height_cm,
            provenance: meta.provenance,
            kind: meta.kind,
        };
        movie.validate()?;
        Ok(movie)
    }
}

/// Which field of a movie to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    C,
    U,
    V,
    P,
}

/// Load a ground-truth movie produced externally (or by this crate).
pub fn load_field_movie(path: &Path) -> Result<FieldMovie> {
    FieldMovie::load(path)
}

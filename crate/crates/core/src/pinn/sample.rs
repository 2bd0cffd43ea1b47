//! Batch sampling for training: collocation points inside the lumen ROI,
//! image-domain data points, and sinogram ray picks.

use crate::ctsim::sinogram::Sinogram;
use crate::error::{CtflowError, Result};
use crate::flowgen::movie::{Field, FieldMovie};
use crate::geometry::RasterMask;
use crate::pinn::loss::ImagePoint;
use crate::pinn::net::{AxisNorm, Normalization};
use rand::Rng;

/// The spatiotemporal field domain of one training problem, shared by both
/// schemes: the ROI pixels of the scene mask and the covered time window.
pub struct FieldDomain {
    pub mask: RasterMask,
    /// ROI pixel centers [cm].
    pub roi_centers: Vec<(f64, f64)>,
    pub pixel_cm: f64,
    pub height_cm: f64,
    /// Seconds per nondimensional time unit.
    pub time_scale_s: f64,
    /// Training window in nondimensional time.
    pub t_window: (f64, f64),
}

impl FieldDomain {
    pub fn new(mask: &RasterMask, height_cm: f64, time_scale_s: f64, t_window: (f64, f64)) -> Result<Self> {
        let grid = mask.grid;
        let roi_centers: Vec<(f64, f64)> = (0..grid.ny)
            .flat_map(|iy| (0..grid.nx).map(move |ix| (iy, ix)))
            .filter(|&(iy, ix)| mask.roi_at(iy, ix))
            .map(|(iy, ix)| (grid.x_center(ix), grid.y_center(iy)))
            .collect();
        if roi_centers.is_empty() {
            return Err(CtflowError::Domain("mask has no ROI pixels".into()));
        }
        Ok(FieldDomain {
            mask: mask.clone(),
            roi_centers,
            pixel_cm: grid.pixel_cm,
            height_cm,
            time_scale_s,
            t_window,
        })
    }

    /// Input normalization covering the ROI bounding box and time window.
    pub fn normalization(&self) -> Normalization {
        let mut x_min = f64::MAX;
        let mut x_max = f64::MIN;
        let mut y_min = f64::MAX;
        let mut y_max = f64::MIN;
        for &(x, y) in &self.roi_centers {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        // half-pixel margin so jittered samples stay inside
        let m = 0.5 * self.pixel_cm;
        let h = self.height_cm;
        Normalization {
            t: AxisNorm {
                min: self.t_window.0,
                max: self.t_window.1,
            },
            x: AxisNorm {
                min: (x_min - m) / h,
                max: (x_max + m) / h,
            },
            y: AxisNorm {
                min: (y_min - m) / h,
                max: (y_max + m) / h,
            },
        }
    }

    /// Random nondimensional collocation point inside the ROI.
    fn sample_point<R: Rng>(&self, rng: &mut R) -> (f64, f64, f64) {
        let (cx, cy) = self.roi_centers[rng.gen_range(0..self.roi_centers.len())];
        let jx = (rng.gen::<f64>() - 0.5) * self.pixel_cm;
        let jy = (rng.gen::<f64>() - 0.5) * self.pixel_cm;
        let t = rng.gen_range(self.t_window.0..self.t_window.1);
        (t, (cx + jx) / self.height_cm, (cy + jy) / self.height_cm)
    }

    /// Physics collocation batch.
    pub fn physics_batch<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<(f64, f64, f64)> {
        (0..n).map(|_| self.sample_point(rng)).collect()
    }

    /// ImageFlow data batch: collocation points with the reconstructed
    /// concentration attached (nearest frame in time, bilinear in space).
    pub fn imageflow_batch<R: Rng>(
        &self,
        rng: &mut R,
        n: usize,
        recon: &FieldMovie,
    ) -> Vec<ImagePoint> {
        (0..n)
            .map(|_| {
                let (t, x, y) = self.sample_point(rng);
                let k = recon.nearest_frame(t);
                let c_ct = recon.grid.bilinear(
                    recon.frame(Field::C, k),
                    x * self.height_cm,
                    y * self.height_cm,
                );
                ImagePoint { t, x, y, c_ct }
            })
            .collect()
    }

    /// Center and radius [cm] of a circle bounding the ROI pixels.
    pub fn roi_circle(&self) -> ((f64, f64), f64) {
        let n = self.roi_centers.len() as f64;
        let cx = self.roi_centers.iter().map(|p| p.0).sum::<f64>() / n;
        let cy = self.roi_centers.iter().map(|p| p.1).sum::<f64>() / n;
        let r2 = self
            .roi_centers
            .iter()
            .map(|&(x, y)| (x - cx).powi(2) + (y - cy).powi(2))
            .fold(0.0f64, f64::max);
        ((cx, cy), r2.sqrt() + self.pixel_cm)
    }

    /// Random (view, channel) picks among pulse-on views, restricted to
    /// rays whose line meets the ROI bounding circle (rays that miss the
    /// scene carry no gradient).
    pub fn ray_picks<R: Rng>(&self, rng: &mut R, sino: &Sinogram, n: usize) -> Vec<(usize, usize)> {
        let on_views: Vec<usize> = sino.on_views().collect();
        assert!(!on_views.is_empty(), "sinogram has no on views");
        let (center, radius) = self.roi_circle();
        let geom = &sino.geom;
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while out.len() < n {
            let v = on_views[rng.gen_range(0..on_views.len())];
            let ch = rng.gen_range(0..sino.n_channels());
            attempts += 1;
            if attempts > 200 * n {
                // degenerate geometry: fall back to unrestricted sampling
                out.push((v, ch));
                continue;
            }
            let beta = sino.view_angle[v];
            let src = geom.source(beta);
            let dir = geom.ray_direction(beta, geom.channel_gamma(ch));
            // distance from the circle center to the ray line
            let (px, py) = (center.0 - src.0, center.1 - src.1);
            let cross = (px * dir.1 - py * dir.0).abs();
            if cross <= radius {
                out.push((v, ch));
            }
        }
        out
    }
}

//! Raster grid specification shared by masks, field movies and reconstructions.

use serde::{Deserialize, Serialize};

/// A uniform square-pixel raster covering a rectangular region of the
/// imaging plane. Pixel (iy, ix) is centered at
/// `(x0 + (ix + 0.5) * pixel_cm, y0 + (iy + 0.5) * pixel_cm)`.
///
/// Row index iy increases with +y so that arrays index as `[iy][ix]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ny: usize,
    pub nx: usize,
    /// Pixel side length [cm].
    pub pixel_cm: f64,
    /// x coordinate of the left edge [cm].
    pub x0: f64,
    /// y coordinate of the bottom edge [cm].
    pub y0: f64,
}

impl GridSpec {
    /// Square grid of `n` x `n` pixels centered on the origin with side `fov_cm`.
    pub fn centered_square(n: usize, fov_cm: f64) -> Self {
        let pixel_cm = fov_cm / n as f64;
        GridSpec {
            ny: n,
            nx: n,
            pixel_cm,
            x0: -fov_cm / 2.0,
            y0: -fov_cm / 2.0,
        }
    }

    pub fn width_cm(&self) -> f64 {
        self.nx as f64 * self.pixel_cm
    }

    pub fn height_cm(&self) -> f64 {
        self.ny as f64 * self.pixel_cm
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.width_cm()
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + self.height_cm()
    }

    /// Center of pixel column ix.
    pub fn x_center(&self, ix: usize) -> f64 {
        self.x0 + (ix as f64 + 0.5) * self.pixel_cm
    }

    /// Center of pixel row iy.
    pub fn y_center(&self, iy: usize) -> f64 {
        self.y0 + (iy as f64 + 0.5) * self.pixel_cm
    }

    pub fn n_pixels(&self) -> usize {
        self.ny * self.nx
    }

    /// Bilinear interpolation of a flat row-major field at physical (x, y).
    /// Points outside the pixel-center hull clamp to the edge value.
    pub fn bilinear(&self, field: &[f32], x: f64, y: f64) -> f64 {
        debug_assert_eq!(field.len(), self.n_pixels());
        let fx = (x - self.x0) / self.pixel_cm - 0.5;
        let fy = (y - self.y0) / self.pixel_cm - 0.5;
        let ix = fx.floor().clamp(0.0, (self.nx - 2) as f64) as usize;
        let iy = fy.floor().clamp(0.0, (self.ny - 2) as f64) as usize;
        let tx = (fx - ix as f64).clamp(0.0, 1.0);
        let ty = (fy - iy as f64).clamp(0.0, 1.0);
        let i00 = field[iy * self.nx + ix] as f64;
        let i01 = field[iy * self.nx + ix + 1] as f64;
        let i10 = field[(iy + 1) * self.nx + ix] as f64;
        let i11 = field[(iy + 1) * self.nx + ix + 1] as f64;
        i00 * (1.0 - tx) * (1.0 - ty) + i01 * tx * (1.0 - ty) + i10 * (1.0 - tx) * ty + i11 * tx * ty
    }

    /// Index of the pixel containing physical (x, y), if inside the grid.
    pub fn pixel_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.x0) / self.pixel_cm;
        let fy = (y - self.y0) / self.pixel_cm;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let ix = fx as usize;
        let iy = fy as usize;
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        Some((iy, ix))
    }
}

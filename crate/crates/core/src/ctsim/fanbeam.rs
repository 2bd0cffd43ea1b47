//! Equiangular fan-beam acquisition geometry.

use crate::error::{CtflowError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FanBeamGeometry {
    /// Total fan opening angle [degrees].
    pub fan_angle_deg: f64,
    pub n_channels: usize,
    /// X-ray beams integrated per detector channel.
    pub subrays_per_channel: usize,
    pub views_per_rotation: usize,
    /// Source-to-isocenter distance [cm].
    pub source_to_iso_cm: f64,
    /// Side length of the square field of view [cm].
    pub fov_cm: f64,
}

impl FanBeamGeometry {
    /// Clinical-scanner scale: 43.6 degree fan, 1600 channels of 5 beams,
    /// 984 views per rotation, 50 cm field of view. The source distance is
    /// chosen so the fan exactly covers the inscribed FOV circle.
    pub fn paper() -> Self {
        let fan_angle_deg = 43.6f64;
        let fov_cm = 50.0;
        FanBeamGeometry {
            fan_angle_deg,
            n_channels: 1600,
            subrays_per_channel: 5,
            views_per_rotation: 984,
            source_to_iso_cm: (fov_cm / 2.0) / (fan_angle_deg / 2.0).to_radians().sin(),
            fov_cm,
        }
    }

    /// Reduced geometry for desk-scale studies, keeping the fan opening and
    /// the coverage rule.
    pub fn desk(fov_cm: f64, n_channels: usize, views_per_rotation: usize) -> Self {
        let fan_angle_deg = 43.6f64;
        FanBeamGeometry {
            fan_angle_deg,
            n_channels,
            subrays_per_channel: 5,
            views_per_rotation,
            source_to_iso_cm: (fov_cm / 2.0) / (fan_angle_deg / 2.0).to_radians().sin(),
            fov_cm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 || self.views_per_rotation == 0 || self.subrays_per_channel == 0 {
            return Err(CtflowError::Config("empty fan-beam geometry".into()));
        }
        let reach = self.source_to_iso_cm * (self.fan_angle_deg / 2.0).to_radians().sin();
        if reach + 1e-9 < self.fov_cm / 2.0 {
            return Err(CtflowError::Config(format!(
                "fan covers radius {reach:.2} cm < inscribed FOV radius {:.2} cm",
                self.fov_cm / 2.0
            )));
        }
        Ok(())
    }

    /// Angular pitch of one detector channel [rad].
    pub fn channel_pitch_rad(&self) -> f64 {
        self.fan_angle_deg.to_radians() / self.n_channels as f64
    }

    /// Fan angle gamma of channel center `i`, measured from the central ray.
    pub fn channel_gamma(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - self.n_channels as f64 / 2.0) * self.channel_pitch_rad()
    }

    /// Fan angle of subray `j` within channel `i`.
    pub fn subray_gamma(&self, i: usize, j: usize) -> f64 {
        let m = self.subrays_per_channel as f64;
        self.channel_gamma(i) + ((j as f64 + 0.5) / m - 0.5) * self.channel_pitch_rad()
    }

    /// Source position for gantry angle beta [rad].
    pub fn source(&self, beta: f64) -> (f64, f64) {
        (
            self.source_to_iso_cm * beta.cos(),
            self.source_to_iso_cm * beta.sin(),
        )
    }

    /// Unit ray direction for gantry angle beta and fan angle gamma.
    /// gamma = 0 points at the isocenter; positive gamma rotates with
    /// increasing detector index.
    pub fn ray_direction(&self, beta: f64, gamma: f64) -> (f64, f64) {
        (-(beta + gamma).cos(), -(beta + gamma).sin())
    }

    /// Basis for locating a point in the fan of view `beta`:
    /// gamma' = atan2(d . e_t, d . e_c), with d the source-to-point vector.
    pub fn fan_basis(&self, beta: f64) -> ((f64, f64), (f64, f64)) {
        let e_c = (-beta.cos(), -beta.sin());
        let e_t = (beta.sin(), -beta.cos());
        (e_c, e_t)
    }
}

/// Intersection of the ray p(s) = origin + s*dir with an axis-aligned
/// rectangle, as a parameter interval. Returns None when the ray misses.
pub fn clip_to_rect(
    origin: (f64, f64),
    dir: (f64, f64),
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
) -> Option<(f64, f64)> {
    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for (o, d, lo, hi) in [
        (origin.0, dir.0, x0, x1),
        (origin.1, dir.1, y0, y1),
    ] {
        if d.abs() < 1e-300 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let (a, b) = ((lo - o) / d, (hi - o) / d);
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            s_lo = s_lo.max(a);
            s_hi = s_hi.min(b);
        }
    }
    if s_lo < s_hi {
        Some((s_lo, s_hi))
    } else {
        None
    }
}

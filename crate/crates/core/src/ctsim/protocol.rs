//! Scan protocol: rotation speed, starting angle, dose, pulsed-mode gating.

use crate::error::{CtflowError, Result};
use serde::{Deserialize, Serialize};

/// Gantry rotation speeds swept in the rotation-speed study [Hz].
pub const GRS_SWEEP_HZ: [f64; 7] = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0];

/// Gantry starting angles used for repeat measurements [degrees].
pub const THETA0_SET_DEG: [f64; 6] = [0.0, 30.0, 60.0, 90.0, 120.0, 150.0];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanProtocol {
    /// Gantry rotation speed [Hz].
    pub grs_hz: f64,
    /// Starting gantry angle [degrees].
    pub theta0_deg: f64,
    /// Incident photon count per ray.
    pub i0: f64,
    /// Views per x-ray pulse; `None` means continuous acquisition.
    pub pulse_width: Option<usize>,
    /// Fraction of views acquired, in (0, 1].
    pub duty_cycle: f64,
    pub n_rotations: usize,
    /// Cap on the total acquired views; lets the final rotation stay
    /// partial so an acquisition can cover exactly the movie span.
    pub max_views: Option<usize>,
    /// Attenuation per unit concentration [1/cm]. The default gives a
    /// full-contrast parent-vessel path (1.5 cm) an attenuation of 0.3.
    pub delta_mu: f64,
    pub noise_enabled: bool,
    pub seed: u64,
}

impl ScanProtocol {
    pub fn continuous(grs_hz: f64, theta0_deg: f64, n_rotations: usize) -> Self {
        ScanProtocol {
            grs_hz,
            theta0_deg,
            i0: 1e10,
            pulse_width: None,
            duty_cycle: 1.0,
            n_rotations,
            max_views: None,
            delta_mu: 0.2,
            noise_enabled: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grs_hz <= 0.0 {
            return Err(CtflowError::Config("gantry rotation speed must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.duty_cycle) || self.duty_cycle == 0.0 {
            return Err(CtflowError::Config("duty cycle must lie in (0, 1]".into()));
        }
        if let Some(pw) = self.pulse_width {
            if pw == 0 {
                return Err(CtflowError::Config("pulse width must be at least 1 view".into()));
            }
        }
        if self.duty_cycle < 1.0 && self.pulse_width.is_none() {
            return Err(CtflowError::Config(
                "duty cycle below 1 requires a pulse width".into(),
            ));
        }
        if self.i0 <= 0.0 {
            return Err(CtflowError::Config("incident intensity must be positive".into()));
        }
        if self.n_rotations == 0 {
            return Err(CtflowError::Config("at least one rotation required".into()));
        }
        if self.delta_mu <= 0.0 {
            return Err(CtflowError::Config("delta_mu must be positive".into()));
        }
        Ok(())
    }

    /// Duration of one view [s].
    pub fn view_duration_s(&self, views_per_rotation: usize) -> f64 {
        1.0 / (views_per_rotation as f64 * self.grs_hz)
    }

    /// Total views acquired.
    pub fn n_views(&self, views_per_rotation: usize) -> usize {
        let full = self.n_rotations * views_per_rotation;
        match self.max_views {
            Some(cap) => full.min(cap),
            None => full,
        }
    }

    /// Protocol covering a time span: enough rotations to reach the end,
    /// with the final rotation left partial.
    pub fn covering_span(
        grs_hz: f64,
        theta0_deg: f64,
        span_s: f64,
        views_per_rotation: usize,
    ) -> Self {
        let mut p = ScanProtocol::continuous(grs_hz, theta0_deg, 1);
        let view_dt = p.view_duration_s(views_per_rotation);
        let n_views = ((span_s / view_dt).floor() as usize + 1).max(1);
        p.n_rotations = n_views.div_ceil(views_per_rotation).max(1);
        p.max_views = Some(n_views);
        p
    }

    /// Gantry angular speed [rad/s].
    pub fn omega_rad_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.grs_hz
    }

    /// Number of off-views following each pulse.
    pub fn off_views(&self) -> Result<usize> {
        let pw = match self.pulse_width {
            None => return Ok(0),
            Some(pw) => pw,
        };
        if self.duty_cycle >= 1.0 {
            return Ok(0);
        }
        let off = (pw as f64 * (1.0 - self.duty_cycle) / self.duty_cycle).round() as usize;
        if off == 0 {
            return Err(CtflowError::Config(format!(
                "pulse width {pw} at duty {} rounds to zero off-views",
                self.duty_cycle
            )));
        }
        Ok(off)
    }

    /// The realized on-fraction after rounding the off-view count.
    pub fn realized_duty(&self) -> Result<f64> {
        let off = self.off_views()?;
        match self.pulse_width {
            None => Ok(1.0),
            Some(pw) if self.duty_cycle >= 1.0 => {
                let _ = pw;
                Ok(1.0)
            }
            Some(pw) => Ok(pw as f64 / (pw + off) as f64),
        }
    }
}

/// Periodic on/off pattern over all acquired views: `pulse_width`
/// consecutive on-views followed by the rounded complement of off-views.
pub fn pulse_mask(protocol: &ScanProtocol, n_views_total: usize) -> Result<Vec<bool>> {
    protocol.validate()?;
    let off = protocol.off_views()?;
    match protocol.pulse_width {
        None => Ok(vec![true; n_views_total]),
        Some(_) if protocol.duty_cycle >= 1.0 => Ok(vec![true; n_views_total]),
        Some(pw) => {
            let period = pw + off;
            Ok((0..n_views_total).map(|v| v % period < pw).collect())
        }
    }
}

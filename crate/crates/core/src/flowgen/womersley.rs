//! Pulsatile plane-channel flow driven by a mean plus oscillatory pressure
//! gradient, and the oscillatory inlet concentration trace.
//!
//! All quantities are nondimensional: lengths by the channel height H,
//! velocities by the characteristic velocity u_c, times by H/u_c.

use crate::error::{CtflowError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Flow parameters of the pulsatile channel problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowParams {
    /// Characteristic (peak) velocity [cm/s].
    pub u_c_cm_s: f64,
    /// Channel height H [cm].
    pub height_cm: f64,
    /// Kinematic viscosity [m^2/s].
    pub nu_m2_s: f64,
    /// Cardiac angular frequency [rad/s].
    pub omega_rad_s: f64,
    /// Mean nondimensional streamwise pressure-gradient magnitude.
    pub dp_mean: f64,
    /// Pulsatile nondimensional pressure-gradient amplitude.
    pub dp_pulse: f64,
    /// Bolus-frequency constant of the inlet concentration trace.
    pub beta: f64,
}

impl FlowParams {
    /// Reference configuration: inferior-vena-cava scale flow
    /// (u_c = 30 cm/s, H = 1.5 cm, nu = 3.8e-6 m^2/s, 70 bpm), with the
    /// pressure-gradient split tuned for a 50% pulsatile velocity fraction
    /// and the peak velocity normalized to u_c.
    pub fn paper() -> Self {
        let mut p = FlowParams {
            u_c_cm_s: 30.0,
            height_cm: 1.5,
            nu_m2_s: 3.8e-6,
            omega_rad_s: 7.33,
            dp_mean: 0.0,
            dp_pulse: 0.0,
            beta: 2.0,
        };
        p.set_gradients_for_peak(0.5);
        p
    }

    /// Reynolds number u_c H / nu.
    pub fn reynolds(&self) -> f64 {
        (self.u_c_cm_s / 100.0) * (self.height_cm / 100.0) / self.nu_m2_s
    }

    /// Strouhal number omega H / u_c.
    pub fn strouhal(&self) -> f64 {
        self.omega_rad_s * (self.height_cm / 100.0) / (self.u_c_cm_s / 100.0)
    }

    /// Womersley number sqrt(Re St).
    pub fn womersley_alpha(&self) -> f64 {
        (self.reynolds() * self.strouhal()).sqrt()
    }

    /// Complex decay constant sqrt(i Re St).
    pub fn lambda(&self) -> Complex64 {
        (Complex64::new(0.0, 1.0) * self.reynolds() * self.strouhal()).sqrt()
    }

    /// Nondimensional period of the pulsatile cycle, 2 pi / St.
    pub fn cycle_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.strouhal()
    }

    /// Seconds per nondimensional time unit (H / u_c).
    pub fn time_scale_s(&self) -> f64 {
        self.height_cm / self.u_c_cm_s
    }

    /// Set the pressure gradients so that the oscillatory core velocity is
    /// `pulse_fraction` of the steady centerline velocity, then rescale both
    /// so that max over (y, t) of the velocity equals exactly 1.
    pub fn set_gradients_for_peak(&mut self, pulse_fraction: f64) {
        let re = self.reynolds();
        let st = self.strouhal();
        self.dp_mean = 8.0 / re;
        // plug-core oscillation amplitude is ~ dp_pulse / St
        self.dp_pulse = pulse_fraction * st;
        let m = self.max_velocity_dense();
        self.dp_mean /= m;
        self.dp_pulse /= m;
    }

    /// Dense-grid search of max_{y,t} u over one cycle.
    pub fn max_velocity_dense(&self) -> f64 {
        let mut max = f64::MIN;
        let period = self.cycle_period();
        for it in 0..512 {
            let t = period * it as f64 / 512.0;
            for iy in 0..=400 {
                let y = -0.5 + iy as f64 / 400.0;
                let u = womersley_velocity(y, t, self).expect("y in range");
                if u > max {
                    max = u;
                }
            }
        }
        max
    }
}

/// Streamwise velocity of the pulsatile channel solution at nondimensional
/// transverse position `y_tilde` (|y| <= 1/2) and time `t_tilde`.
///
/// The transverse component is identically zero.
pub fn womersley_velocity(y_tilde: f64, t_tilde: f64, params: &FlowParams) -> Result<f64> {
    if y_tilde.abs() > 0.5 {
        return Err(CtflowError::Domain(format!(
            "y = {y_tilde} outside channel half-height 0.5"
        )));
    }
    let re = params.reynolds();
    let st = params.strouhal();
    let steady = 0.5 * re * params.dp_mean * (0.25 - y_tilde * y_tilde);

    if params.dp_pulse == 0.0 {
        return Ok(steady);
    }
    let lambda = params.lambda();
    // A Re / (i alpha^2) = A / (i St)
    let coeff = Complex64::new(params.dp_pulse, 0.0) / (Complex64::new(0.0, 1.0) * st);
    let profile = (lambda * y_tilde).cosh() / (lambda * 0.5).cosh() - 1.0;
    let phase = (Complex64::new(0.0, 1.0) * st * t_tilde).exp();
    Ok(steady + (coeff * profile * phase).re)
}

/// Nondimensional streamwise pressure gradient at time `t_tilde`.
///
/// The steady part drives the parabolic profile (dp/dx = -dp_mean); the
/// oscillatory part is the conjugate driver of the pulsatile profile.
pub fn pressure_gradient(t_tilde: f64, params: &FlowParams) -> f64 {
    let st = params.strouhal();
    let osc = if params.dp_pulse == 0.0 {
        0.0
    } else {
        (Complex64::new(params.dp_pulse, 0.0)
            * (Complex64::new(0.0, 1.0) * st * t_tilde).exp())
        .re
    };
    -params.dp_mean + osc
}

/// Nondimensional pressure field, zero at the inlet plane x = 0.
pub fn pressure(x_tilde: f64, t_tilde: f64, params: &FlowParams) -> f64 {
    pressure_gradient(t_tilde, params) * x_tilde
}

/// Inlet concentration trace sin^2(beta St pi t), spatially uniform across
/// the inlet.
pub fn inlet_concentration(t_tilde: f64, params: &FlowParams) -> f64 {
    let s = (params.beta * params.strouhal() * std::f64::consts::PI * t_tilde).sin();
    s * s
}

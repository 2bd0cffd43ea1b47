//! Flow-accuracy metrics: section velocity time series, decile errors,
//! outlet flow ratio, concentration RMSE, and the rotation-speed threshold
//! from the advection timescale argument.

use crate::error::{CtflowError, Result};
use crate::flowgen::movie::{Field, FieldMovie};
use crate::geometry::CrossSection;
use crate::pinn::net::FieldNetwork;
use serde::{Deserialize, Serialize};

/// A source of velocity samples at nondimensional time and physical [cm]
/// position, in nondimensional velocity units.
pub trait VelocitySource {
    fn velocity_at(&self, t: f64, x_cm: f64, y_cm: f64) -> (f64, f64);
    /// Length scale for nondimensionalizing coordinates [cm].
    fn height_cm(&self) -> f64;
}

impl VelocitySource for FieldMovie {
    fn velocity_at(&self, t: f64, x_cm: f64, y_cm: f64) -> (f64, f64) {
        (
            self.sample(Field::U, t, x_cm, y_cm),
            self.sample(Field::V, t, x_cm, y_cm),
        )
    }
    fn height_cm(&self) -> f64 {
        self.height_cm
    }
}

/// A trained network paired with its length scale.
pub struct NetworkVelocity<'a> {
    pub net: &'a FieldNetwork,
    pub height_cm: f64,
}

impl VelocitySource for NetworkVelocity<'_> {
    fn velocity_at(&self, t: f64, x_cm: f64, y_cm: f64) -> (f64, f64) {
        match self
            .net
            .evaluate_fields(&[(t, x_cm / self.height_cm, y_cm / self.height_cm)])
        {
            Ok(v) => (v[0][1], v[0][2]),
            Err(_) => (f64::NAN, f64::NAN),
        }
    }
    fn height_cm(&self) -> f64 {
        self.height_cm
    }
}

/// Section-mean normal velocity per time, converted to m/s via `u_c_cm_s`.
pub fn velocity_timeseries(
    source: &dyn VelocitySource,
    section: &CrossSection,
    times: &[f64],
    u_c_cm_s: f64,
) -> Result<Vec<f64>> {
    if section.points.is_empty() {
        return Err(CtflowError::Metrics("empty cross-section locus".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let mut acc = 0.0;
        for &(x, y) in &section.points {
            let (u, v) = source.velocity_at(t, x, y);
            acc += u * section.normal.0 + v * section.normal.1;
        }
        out.push(acc / section.points.len() as f64 * u_c_cm_s / 100.0);
    }
    Ok(out)
}

/// Volumetric flow (per unit depth) through a section at each time,
/// in nondimensional velocity times cm.
pub fn flow_timeseries(
    source: &dyn VelocitySource,
    section: &CrossSection,
    times: &[f64],
) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            section
                .points
                .iter()
                .map(|&(x, y)| {
                    let (u, v) = source.velocity_at(t, x, y);
                    u * section.normal.0 + v * section.normal.1
                })
                .sum::<f64>()
                * section.ds_cm
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecileErrors {
    pub high_err: f64,
    pub low_err: f64,
    pub range_err: f64,
    pub rmse: f64,
}

/// Errors of the velocity series: the mismatch of the upper-decile mean,
/// of the lower-decile mean, of the (high - low) range, and the pointwise
/// RMSE. All in the units of the inputs.
pub fn decile_errors(pred: &[f64], truth: &[f64]) -> Result<DecileErrors> {
    if pred.len() != truth.len() {
        return Err(CtflowError::Metrics("series length mismatch".into()));
    }
    let n = pred.len();
    if n < 10 {
        return Err(CtflowError::Metrics(format!(
            "need at least 10 samples for decile metrics, got {n}"
        )));
    }
    let k = n / 10;
    let decile_means = |series: &[f64]| -> (f64, f64) {
        let mut sorted = series.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let low = sorted[..k].iter().sum::<f64>() / k as f64;
        let high = sorted[n - k..].iter().sum::<f64>() / k as f64;
        (high, low)
    };
    let (high_p, low_p) = decile_means(pred);
    let (high_t, low_t) = decile_means(truth);
    let rmse = (pred
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(DecileErrors {
        high_err: (high_p - high_t).abs(),
        low_err: (low_p - low_t).abs(),
        range_err: ((high_p - low_p) - (high_t - low_t)).abs(),
        rmse,
    })
}

/// Ratio of time-averaged volumetric flows, upper over lower daughter.
pub fn outlet_ratio(
    source: &dyn VelocitySource,
    outlet_upper: &CrossSection,
    outlet_lower: &CrossSection,
    times: &[f64],
) -> Result<f64> {
    let q_upper = flow_timeseries(source, outlet_upper, times);
    let q_lower = flow_timeseries(source, outlet_lower, times);
    let mean_u = q_upper.iter().sum::<f64>() / q_upper.len() as f64;
    let mean_l = q_lower.iter().sum::<f64>() / q_lower.len() as f64;
    if mean_l.abs() < 1e-12 {
        return Err(CtflowError::Metrics("zero lower-outlet flow".into()));
    }
    Ok(mean_u / mean_l)
}

/// Concentration RMSE of a predicted field against the ground-truth movie
/// over the ROI pixels and the truth frame times.
pub fn conc_rmse_movie(pred: &FieldMovie, truth: &FieldMovie) -> f64 {
    let nyx = truth.grid.n_pixels();
    let mut se = 0.0;
    let mut n = 0usize;
    for (k, &t) in truth.times.iter().enumerate() {
        let pk = pred.nearest_frame(t);
        let pf = pred.frame(Field::C, pk);
        let tf = truth.frame(Field::C, k);
        for j in 0..nyx {
            if truth.mask.roi[j] {
                se += (pf[j] as f64 - tf[j] as f64).powi(2);
                n += 1;
            }
        }
    }
    (se / n as f64).sqrt()
}

/// Concentration RMSE of a trained network against the ground truth over
/// ROI pixel centers and truth frame times.
pub fn conc_rmse_network(net: &FieldNetwork, truth: &FieldMovie) -> Result<f64> {
    let grid = truth.grid;
    let h = truth.height_cm;
    let mut coords = Vec::new();
    let mut targets = Vec::new();
    for (k, &t) in truth.times.iter().enumerate() {
        let tf = truth.frame(Field::C, k);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let j = iy * grid.nx + ix;
                if truth.mask.roi[j] {
                    coords.push((t, grid.x_center(ix) / h, grid.y_center(iy) / h));
                    targets.push(tf[j] as f64);
                }
            }
        }
    }
    let mut se = 0.0;
    // chunked batched evaluation
    for (chunk_pts, chunk_tg) in coords.chunks(8192).zip(targets.chunks(8192)) {
        let out = net.evaluate_fields(chunk_pts)?;
        for (o, &t) in out.iter().zip(chunk_tg) {
            se += (o[0] - t).powi(2);
        }
    }
    Ok((se / targets.len() as f64).sqrt())
}

/// Inputs of the rotation-speed threshold estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StrouhalInputs {
    pub st_flow: f64,
    pub omega_flow_rad_s: f64,
    /// Bolus-front thickness over vessel height.
    pub l_c_over_h: f64,
}

/// Minimum gantry frequency [Hz] below which the contrast advected during
/// one rotation perturbs the projections appreciably:
/// f = omega_flow / (St_flow * (L_c / H)).
pub fn strouhal_threshold(inputs: &StrouhalInputs) -> Result<f64> {
    if inputs.st_flow <= 0.0 || inputs.omega_flow_rad_s <= 0.0 || inputs.l_c_over_h <= 0.0 {
        return Err(CtflowError::Domain("Strouhal inputs must be positive".into()));
    }
    // omega_gantry_min / omega_flow = (2 pi / St) * (H / L_c)
    let omega_gantry_min =
        inputs.omega_flow_rad_s * 2.0 * std::f64::consts::PI / (inputs.st_flow * inputs.l_c_over_h);
    Ok(omega_gantry_min / (2.0 * std::f64::consts::PI))
}

/// All error metrics for one (condition, starting angle, method) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub grs_hz: f64,
    pub theta0_deg: f64,
    pub i0: Option<f64>,
    pub cnr: Option<f64>,
    pub duty_cycle: Option<f64>,
    pub pulse_width: Option<usize>,
    pub method: String,
    pub conc_rmse: f64,
    /// Inlet velocity RMSE [m/s].
    pub vel_rmse_ms: f64,
    pub vel_range_err_ms: f64,
    pub high_vel_err_ms: f64,
    pub low_vel_err_ms: f64,
    pub outlet_ratio: f64,
    pub config_hash: String,
}

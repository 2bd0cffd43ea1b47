//! Experiment configuration: one document fully determines a sweep.

use crate::ctsim::FanBeamGeometry;
use crate::error::{CtflowError, Result};
use crate::flowgen::FlowParams;
use crate::grid::GridSpec;
use crate::pinn::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GrsSweep,
    NoiseSweep,
    PulseSweep,
    SingleRun,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSettings {
    pub u_c_cm_s: f64,
    pub height_cm: f64,
    pub nu_m2_s: f64,
    pub omega_rad_s: f64,
    /// Bolus-frequency constant of the sin^2 inlet trace.
    pub beta: f64,
    /// Oscillatory-to-steady velocity fraction before peak normalization.
    pub pulse_fraction: f64,
}

impl FlowSettings {
    pub fn reference() -> Self {
        FlowSettings {
            u_c_cm_s: 30.0,
            height_cm: 1.5,
            nu_m2_s: 3.8e-6,
            omega_rad_s: 7.33,
            beta: 2.0,
            pulse_fraction: 0.5,
        }
    }

    pub fn to_params(&self) -> FlowParams {
        let mut p = FlowParams {
            u_c_cm_s: self.u_c_cm_s,
            height_cm: self.height_cm,
            nu_m2_s: self.nu_m2_s,
            omega_rad_s: self.omega_rad_s,
            dp_mean: 0.0,
            dp_pulse: 0.0,
            beta: self.beta,
        };
        p.set_gradients_for_peak(self.pulse_fraction);
        p
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSettings {
    /// Pixels per side of the square grid.
    pub grid_n: usize,
    pub fov_cm: f64,
    /// Frames spanning two pulsatile cycles.
    pub nt: usize,
}

impl SceneSettings {
    pub fn grid(&self) -> GridSpec {
        GridSpec::centered_square(self.grid_n, self.fov_cm)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSettings {
    pub n_channels: usize,
    pub views_per_rotation: usize,
    pub subrays_per_channel: usize,
    pub grs_list_hz: Vec<f64>,
    pub theta0_list_deg: Vec<f64>,
    /// Incident intensities for the noise sweep; empty means noise-free.
    pub i0_list: Vec<f64>,
    pub duty_cycles: Vec<f64>,
    pub pulse_widths: Vec<usize>,
    /// Rotation speed held fixed by the noise and pulsed-mode sweeps.
    pub grs_fixed_hz: f64,
    pub delta_mu: f64,
}

impl ScanSettings {
    pub fn geometry(&self, fov_cm: f64) -> FanBeamGeometry {
        let mut g = FanBeamGeometry::desk(fov_cm, self.n_channels, self.views_per_rotation);
        g.subrays_per_channel = self.subrays_per_channel;
        g
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSettings {
    pub hidden_layers: usize,
    pub width: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub lambda0: f64,
    pub n_p: usize,
    pub n_phys: usize,
    pub n_data: usize,
    pub n_rays: usize,
    /// Methods to run per condition: "imageflow", "sinoflow".
    pub methods: Vec<String>,
}

impl TrainSettings {
    pub fn to_train_config(&self, reynolds: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_layers: self.hidden_layers,
            width: self.width,
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            lambda0: self.lambda0,
            n_p: self.n_p,
            n_phys: self.n_phys,
            n_data: self.n_data,
            n_rays: self.n_rays,
            reynolds,
            seed,
            loss_every: 100,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub flow: FlowSettings,
    pub scene: SceneSettings,
    pub scan: ScanSettings,
    pub train: TrainSettings,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Desk-scale template: channel scene on a 256^2 grid over a 10 cm
    /// field of view, reduced detector, reduced network.
    pub fn desk_template(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            flow: FlowSettings {
                // two boluses per pulsatile cycle at desk scale
                beta: 1.0 / std::f64::consts::PI,
                ..FlowSettings::reference()
            },
            scene: SceneSettings {
                grid_n: 256,
                fov_cm: 10.0,
                nt: 100,
            },
            scan: ScanSettings {
                n_channels: 192,
                views_per_rotation: 246,
                subrays_per_channel: 5,
                grs_list_hz: vec![1.0, 4.0, 10.0],
                theta0_list_deg: vec![0.0, 60.0, 120.0],
                i0_list: vec![],
                duty_cycles: vec![1.0],
                pulse_widths: vec![10],
                grs_fixed_hz: 4.0,
                delta_mu: 0.2,
            },
            train: TrainSettings {
                hidden_layers: 5,
                width: 48,
                iterations: 3500,
                learning_rate: 1e-3,
                lambda0: 1.0,
                n_p: 256,
                n_phys: 768,
                n_data: 768,
                n_rays: 24,
                methods: vec!["imageflow".into(), "sinoflow".into()],
            },
            seed: 2024,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scene.grid_n == 0 || self.scene.nt < 2 {
            return Err(CtflowError::Config("scene too small".into()));
        }
        if self.scan.grs_list_hz.is_empty() || self.scan.theta0_list_deg.is_empty() {
            return Err(CtflowError::Config("empty scan condition lists".into()));
        }
        for m in &self.train.methods {
            if m != "imageflow" && m != "sinoflow" {
                return Err(CtflowError::Config(format!("unknown method {m}")));
            }
        }
        if self.kind == ExperimentKind::NoiseSweep && self.scan.i0_list.is_empty() {
            return Err(CtflowError::Config("noise sweep requires i0_list".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CtflowError::Config(format!("config parse: {e}")))
    }

    /// Short content hash of the full configuration.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml().as_bytes());
        hex12(&h.finalize())
    }

    /// Hash of the ground-truth inputs only (flow + scene + seed).
    pub fn ground_truth_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(toml::to_string(&self.flow).expect("flow").as_bytes());
        h.update(toml::to_string(&self.scene).expect("scene").as_bytes());
        hex12(&h.finalize())
    }
}

pub fn hex12(bytes: &[u8]) -> String {
    bytes
        .iter()
        .take(6)
        .map(|b| format!("{b:02x}"))
        .collect::<String>()
}

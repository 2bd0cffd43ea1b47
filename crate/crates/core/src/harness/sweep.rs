//! Configuration-driven experiment runner: simulate, reconstruct, train
//! and evaluate each sweep cell, with content-addressed resume.

use crate::ctsim::{forward_project_dynamic, noisy_sinogram, ScanProtocol, Sinogram};
use crate::error::{CtflowError, Result};
use crate::flowgen::movie::FieldMovie;
use crate::flowgen::synthesize_channel_case;
use crate::geometry::{locate_cross_sections, CrossSection, SectionName, VesselGeometry};
use crate::harness::config::{hex12, ExperimentConfig, ExperimentKind};
use crate::harness::metrics::{
    conc_rmse_network, decile_errors, outlet_ratio, velocity_timeseries, MetricsRecord,
    NetworkVelocity,
};
use crate::pinn::{train, FieldDomain, TrainConfig, TrainData, TrainMode};
use crate::recon::{reconstruct_movie, ReconConfig};
use crate::store;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepCell {
    pub grs_hz: f64,
    pub theta0_deg: f64,
    pub i0: Option<f64>,
    pub duty_cycle: Option<f64>,
    pub pulse_width: Option<usize>,
    pub method: TrainMode,
}

impl SweepCell {
    fn label(&self) -> String {
        let mut s = format!("grs{}_th{}_{}", self.grs_hz, self.theta0_deg, match self.method {
            TrainMode::ImageFlow => "imageflow",
            TrainMode::SinoFlow => "sinoflow",
        });
        if let Some(i0) = self.i0 {
            s.push_str(&format!("_i0{i0:.1e}"));
        }
        if let (Some(d), Some(pw)) = (self.duty_cycle, self.pulse_width) {
            s.push_str(&format!("_pw{pw}_d{d}"));
        }
        s
    }
}

#[derive(Debug)]
pub struct CellOutcome {
    pub cell: SweepCell,
    pub dir: PathBuf,
    pub result: std::result::Result<MetricsRecord, String>,
    /// Cell was already complete and was loaded, not recomputed.
    pub resumed: bool,
}

fn parse_method(name: &str) -> TrainMode {
    match name {
        "imageflow" => TrainMode::ImageFlow,
        _ => TrainMode::SinoFlow,
    }
}

/// The cell grid of an experiment.
pub fn enumerate_cells(config: &ExperimentConfig) -> Vec<SweepCell> {
    let scan = &config.scan;
    let methods: Vec<TrainMode> = config.train.methods.iter().map(|m| parse_method(m)).collect();
    let mut cells = Vec::new();
    match config.kind {
        ExperimentKind::GrsSweep => {
            for &grs in &scan.grs_list_hz {
                for &th in &scan.theta0_list_deg {
                    for &m in &methods {
                        cells.push(SweepCell {
                            grs_hz: grs,
                            theta0_deg: th,
                            i0: None,
                            duty_cycle: None,
                            pulse_width: None,
                            method: m,
                        });
                    }
                }
            }
        }
        ExperimentKind::NoiseSweep => {
            for &i0 in &scan.i0_list {
                for &th in &scan.theta0_list_deg {
                    for &m in &methods {
                        cells.push(SweepCell {
                            grs_hz: scan.grs_fixed_hz,
                            theta0_deg: th,
                            i0: Some(i0),
                            duty_cycle: None,
                            pulse_width: None,
                            method: m,
                        });
                    }
                }
            }
        }
        ExperimentKind::PulseSweep => {
            let i0 = scan.i0_list.first().copied();
            for &pw in &scan.pulse_widths {
                for &d in &scan.duty_cycles {
                    for &th in &scan.theta0_list_deg {
                        cells.push(SweepCell {
                            grs_hz: scan.grs_fixed_hz,
                            theta0_deg: th,
                            i0,
                            duty_cycle: Some(d),
                            pulse_width: Some(pw),
                            method: TrainMode::SinoFlow,
                        });
                    }
                }
            }
        }
        ExperimentKind::SingleRun => {
            cells.push(SweepCell {
                grs_hz: scan.grs_list_hz[0],
                theta0_deg: scan.theta0_list_deg[0],
                i0: scan.i0_list.first().copied(),
                duty_cycle: None,
                pulse_width: None,
                method: methods.first().copied().unwrap_or(TrainMode::SinoFlow),
            });
        }
    }
    cells
}

fn cell_hash(config: &ExperimentConfig, cell: &SweepCell) -> String {
    let mut h = Sha256::new();
    h.update(config.to_toml().as_bytes());
    h.update(serde_json::to_string(cell).expect("cell serializes").as_bytes());
    hex12(&h.finalize())
}

/// Seed for one cell: decorrelates conditions while keeping cells that
/// differ only in pulse gating paired (same initialization and batch
/// draws), matching the paired-comparison design.
fn cell_seed(config: &ExperimentConfig, cell: &SweepCell) -> u64 {
    let mut h = Sha256::new();
    h.update(config.seed.to_le_bytes());
    let unpulsed = SweepCell {
        pulse_width: None,
        duty_cycle: None,
        ..cell.clone()
    };
    h.update(unpulsed.label().as_bytes());
    let d = h.finalize();
    // keep within i64 range so the seed survives TOML metadata round trips
    u64::from_le_bytes([d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]]) & (i64::MAX as u64)
}

/// Ground truth for the experiment, cached in the artifact store.
pub fn ground_truth(config: &ExperimentConfig, out_root: &Path) -> Result<FieldMovie> {
    let dir = out_root
        .join("ground_truth")
        .join(config.ground_truth_hash());
    if dir.join("meta.toml").exists() {
        return FieldMovie::load(&dir);
    }
    let params = config.flow.to_params();
    let movie = synthesize_channel_case(&params, &config.scene.grid(), config.scene.nt)?;
    movie.save(&dir)?;
    Ok(movie)
}

struct SinoCache {
    map: HashMap<String, Sinogram>,
}

impl SinoCache {
    fn key(grs: f64, theta0: f64) -> String {
        format!("{}:{}", grs.to_bits(), theta0.to_bits())
    }
}

/// Acquisition for one cell: continuous noise-free projection (cached per
/// rotation-speed and angle), then optional Poisson noise and pulse
/// gating.
fn acquire(
    config: &ExperimentConfig,
    cell: &SweepCell,
    movie: &FieldMovie,
    cache: &mut SinoCache,
) -> Result<Sinogram> {
    let geom = config.scan.geometry(config.scene.fov_cm);
    let key = SinoCache::key(cell.grs_hz, cell.theta0_deg);
    if !cache.map.contains_key(&key) {
        let mut protocol = ScanProtocol::covering_span(
            cell.grs_hz,
            cell.theta0_deg,
            movie.span_s(),
            geom.views_per_rotation,
        );
        protocol.delta_mu = config.scan.delta_mu;
        let sino = forward_project_dynamic(movie, &geom, &protocol)?;
        cache.map.insert(key.clone(), sino);
    }
    let mut sino = cache.map.get(&key).expect("cached").clone();
    if let Some(i0) = cell.i0 {
        sino.protocol.i0 = i0;
        sino.protocol.noise_enabled = true;
        sino.protocol.seed = cell_seed(config, cell);
        sino = noisy_sinogram(&sino)?;
    }
    if let (Some(pw), Some(d)) = (cell.pulse_width, cell.duty_cycle) {
        if d < 1.0 {
            sino = sino.with_pulse_gating(pw, d)?;
        }
    }
    Ok(sino)
}

/// Run one cell end to end, writing its artifacts into `dir`.
fn run_cell(
    config: &ExperimentConfig,
    cell: &SweepCell,
    movie: &FieldMovie,
    sections: &[CrossSection],
    cache: &mut SinoCache,
    dir: &Path,
) -> Result<MetricsRecord> {
    store::ensure_dir(dir)?;
    std::fs::write(dir.join("config.toml"), config.to_toml()).map_err(|e| {
        CtflowError::StoreIo {
            path: dir.join("config.toml"),
            source: e,
        }
    })?;
    std::fs::write(
        dir.join("cell.json"),
        serde_json::to_string_pretty(cell).expect("cell"),
    )
    .map_err(|e| CtflowError::StoreIo {
        path: dir.join("cell.json"),
        source: e,
    })?;

    let sino = acquire(config, cell, movie, cache)?;
    sino.save(&dir.join("sinogram"))?;

    let params = config.flow.to_params();
    let t_window = (movie.times[0], *movie.times.last().unwrap());
    let domain = FieldDomain::new(&movie.mask, movie.height_cm, movie.time_scale_s(), t_window)?;
    let mut tc: TrainConfig = config
        .train
        .to_train_config(params.reynolds(), cell_seed(config, cell));
    tc.checkpoint_dir = Some(dir.join("checkpoint"));

    let geom = config.scan.geometry(config.scene.fov_cm);
    let outcome = match cell.method {
        TrainMode::ImageFlow => {
            let rc = ReconConfig::full_rotation(&geom, movie.grid);
            let recon = reconstruct_movie(&sino, &geom, &rc, &movie.mask, movie.u_c_cm_s, movie.height_cm)?;
            recon.save(&dir.join("recon"))?;
            train(&TrainData::ImageFlow { recon: &recon }, &domain, &tc)?
        }
        TrainMode::SinoFlow => train(&TrainData::SinoFlow { sino: &sino }, &domain, &tc)?,
    };
    crate::pinn::train::write_loss_history(&dir.join("loss_history.csv"), &outcome.history)?;

    // evaluate against the ground truth
    let net = &outcome.net;
    let conc_rmse = conc_rmse_network(net, movie)?;
    let inlet = sections
        .iter()
        .find(|s| s.name == SectionName::Inlet)
        .expect("inlet section");
    let up = sections
        .iter()
        .find(|s| s.name == SectionName::OutletUpper)
        .expect("upper outlet");
    let lo = sections
        .iter()
        .find(|s| s.name == SectionName::OutletLower)
        .expect("lower outlet");
    let nv = NetworkVelocity {
        net,
        height_cm: movie.height_cm,
    };
    let pred_series = velocity_timeseries(&nv, inlet, &movie.times, movie.u_c_cm_s)?;
    let truth_series = velocity_timeseries(movie, inlet, &movie.times, movie.u_c_cm_s)?;
    let errs = decile_errors(&pred_series, &truth_series)?;
    let ratio = outlet_ratio(&nv, up, lo, &movie.times)?;

    let record = MetricsRecord {
        grs_hz: cell.grs_hz,
        theta0_deg: cell.theta0_deg,
        i0: cell.i0,
        cnr: None,
        duty_cycle: cell.duty_cycle,
        pulse_width: cell.pulse_width,
        method: match cell.method {
            TrainMode::ImageFlow => "imageflow".into(),
            TrainMode::SinoFlow => "sinoflow".into(),
        },
        conc_rmse,
        vel_rmse_ms: errs.rmse,
        vel_range_err_ms: errs.range_err,
        high_vel_err_ms: errs.high_err,
        low_vel_err_ms: errs.low_err,
        outlet_ratio: ratio,
        config_hash: config.hash(),
    };
    std::fs::write(
        dir.join("metrics.json"),
        serde_json::to_string_pretty(&record).expect("record"),
    )
    .map_err(|e| CtflowError::StoreIo {
        path: dir.join("metrics.json"),
        source: e,
    })?;
    Ok(record)
}

/// Run every cell of the experiment, skipping cells whose metrics already
/// exist under the content hash of their configuration.
pub fn run_sweep(config: &ExperimentConfig, out_root: &Path) -> Result<Vec<CellOutcome>> {
    config.validate()?;
    let movie = ground_truth(config, out_root)?;
    let geom_kind = if config.scene.fov_cm < 20.0 {
        VesselGeometry::channel(config.flow.height_cm)
    } else {
        VesselGeometry::bifurcation(config.flow.height_cm)
    };
    let sections = locate_cross_sections(&geom_kind, &movie.mask)?;
    let mut cache = SinoCache { map: HashMap::new() };
    let mut outcomes = Vec::new();
    for cell in enumerate_cells(config) {
        let dir = out_root.join("cells").join(cell_hash(config, &cell));
        let metrics_path = dir.join("metrics.json");
        if metrics_path.exists() {
            let text = std::fs::read_to_string(&metrics_path).map_err(|e| CtflowError::StoreIo {
                path: metrics_path.clone(),
                source: e,
            })?;
            let record: MetricsRecord = serde_json::from_str(&text)
                .map_err(|e| CtflowError::Store(format!("metrics.json: {e}")))?;
            outcomes.push(CellOutcome {
                cell,
                dir,
                result: Ok(record),
                resumed: true,
            });
            continue;
        }
        let result = run_cell(config, &cell, &movie, &sections, &mut cache, &dir)
            .map_err(|e| e.to_string());
        outcomes.push(CellOutcome {
            cell,
            dir,
            result,
            resumed: false,
        });
    }
    Ok(outcomes)
}

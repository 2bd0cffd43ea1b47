//! Command-line front end: generate ground truth, scan, reconstruct,
//! train, evaluate, sweep, plot, and the rotation-speed threshold.

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use ctflow::ctsim::{forward_project_dynamic, noisy_sinogram, ScanProtocol, Sinogram};
use ctflow::flowgen::FieldMovie;
use ctflow::geometry::{locate_cross_sections, SectionName, VesselGeometry};
use ctflow::harness::{
    emit_plots, read_metrics_csv, run_sweep, strouhal_threshold, write_metrics_csv,
    ExperimentConfig, StrouhalInputs,
};
use ctflow::pinn::{train, FieldDomain, FieldNetwork, TrainData, TrainMode};
use ctflow::recon::{reconstruct_movie, ReconConfig};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_CELL_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "ctflow", about = "Dynamic CT flow-estimation laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output root; defaults to $CTFLOW_OUT or ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the ground-truth channel movie from a config.
    Generate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate a fan-beam acquisition of a stored movie.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Ground-truth movie directory (defaults to the config's cache).
        #[arg(long)]
        movie: Option<PathBuf>,
        #[arg(long, default_value_t = 4.0)]
        grs: f64,
        #[arg(long, default_value_t = 0.0)]
        theta0: f64,
        /// Incident intensity; enables Poisson noise.
        #[arg(long)]
        i0: Option<f64>,
        #[arg(long)]
        pulse_width: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        duty: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Filtered backprojection of a stored sinogram.
    Recon {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sinogram: PathBuf,
    },
    /// Train one network on a stored sinogram (sinoflow) or reconstruction
    /// (imageflow).
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: TrainMode,
        /// Sinogram directory (sinoflow) or reconstructed movie directory
        /// (imageflow).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained checkpoint against the ground truth.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "sinoflow")]
        method: String,
    },
    /// Run every cell of the configured experiment.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render boxplots and the CSV table from sweep outputs.
    Plot {
        /// metrics.csv produced by a sweep, or a sweep output root.
        #[arg(long)]
        records: PathBuf,
    },
    /// Rotation-speed threshold from the advection timescale argument.
    Threshold {
        #[arg(long, default_value_t = 0.37)]
        st: f64,
        #[arg(long, default_value_t = 7.33)]
        omega_flow: f64,
        #[arg(long, default_value_t = 5.0)]
        lc_over_h: f64,
    },
}

fn parse_mode(s: &str) -> Result<TrainMode, String> {
    match s {
        "imageflow" => Ok(TrainMode::ImageFlow),
        "sinoflow" => Ok(TrainMode::SinoFlow),
        other => Err(format!("unknown mode {other}; use imageflow or sinoflow")),
    }
}

fn out_root(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os("CTFLOW_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config = ExperimentConfig::from_toml(&text)?;
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let out = out_root(&cli.out);
    match &cli.command {
        Command::Generate { config } => {
            let config = load_config(config)?;
            let movie = ctflow::harness::ground_truth(&config, &out)?;
            let dir = out.join("ground_truth").join(config.ground_truth_hash());
            println!(
                "ground truth: {} frames on {}x{} grid -> {}",
                movie.nt(),
                movie.grid.ny,
                movie.grid.nx,
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan {
            config,
            movie,
            grs,
            theta0,
            i0,
            pulse_width,
            duty,
            seed,
        } => {
            let config = load_config(config)?;
            let movie = match movie {
                Some(dir) => FieldMovie::load(dir)?,
                None => ctflow::harness::ground_truth(&config, &out)?,
            };
            let geom = config.scan.geometry(config.scene.fov_cm);
            let n_rot = ((movie.span_s() * grs) as usize).max(1);
            let mut protocol = ScanProtocol::continuous(*grs, *theta0, n_rot);
            protocol.delta_mu = config.scan.delta_mu;
            if let Some(s) = seed {
                protocol.seed = *s;
            }
            let mut sino = forward_project_dynamic(&movie, &geom, &protocol)?;
            if let Some(i0) = i0 {
                sino.protocol.i0 = *i0;
                sino.protocol.noise_enabled = true;
                sino = noisy_sinogram(&sino)?;
            }
            if let Some(pw) = pulse_width {
                if *duty < 1.0 {
                    sino = sino.with_pulse_gating(*pw, *duty)?;
                }
            }
            let dir = out.join(format!("sinogram_grs{grs}_th{theta0}"));
            sino.save(&dir)?;
            println!(
                "sinogram: {} views x {} channels -> {}",
                sino.n_views(),
                sino.n_channels(),
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Recon { config, sinogram } => {
            let config = load_config(config)?;
            let movie = ctflow::harness::ground_truth(&config, &out)?;
            let sino = Sinogram::load(sinogram)?;
            let geom = config.scan.geometry(config.scene.fov_cm);
            let rc = ReconConfig::full_rotation(&geom, movie.grid);
            let recon =
                reconstruct_movie(&sino, &geom, &rc, &movie.mask, movie.u_c_cm_s, movie.height_cm)?;
            let dir = out.join("recon");
            recon.save(&dir)?;
            println!("reconstruction: {} frames -> {}", recon.nt(), dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            config,
            mode,
            data,
            seed,
        } => {
            let config = load_config(config)?;
            let movie = ctflow::harness::ground_truth(&config, &out)?;
            let t_window = (movie.times[0], *movie.times.last().unwrap());
            let domain =
                FieldDomain::new(&movie.mask, movie.height_cm, movie.time_scale_s(), t_window)?;
            let mut tc = config.train.to_train_config(
                config.flow.to_params().reynolds(),
                seed.unwrap_or(config.seed),
            );
            let ckpt = out.join("checkpoint");
            tc.checkpoint_dir = Some(ckpt.clone());
            let outcome = match mode {
                TrainMode::SinoFlow => {
                    let sino = Sinogram::load(data)?;
                    train(&TrainData::SinoFlow { sino: &sino }, &domain, &tc)?
                }
                TrainMode::ImageFlow => {
                    let recon = FieldMovie::load(data)?;
                    train(&TrainData::ImageFlow { recon: &recon }, &domain, &tc)?
                }
            };
            ctflow::pinn::train::write_loss_history(
                &out.join("loss_history.csv"),
                &outcome.history,
            )?;
            let last = outcome.history.last().expect("history");
            println!(
                "trained {} iterations: L_total {:.4e} -> {}",
                tc.iterations,
                last.l_total,
                ckpt.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            config,
            checkpoint,
            method,
        } => {
            let config = load_config(config)?;
            let movie = ctflow::harness::ground_truth(&config, &out)?;
            let (net, _) = FieldNetwork::load_checkpoint(checkpoint)?;
            let geom_kind = if config.scene.fov_cm < 20.0 {
                VesselGeometry::channel(config.flow.height_cm)
            } else {
                VesselGeometry::bifurcation(config.flow.height_cm)
            };
            let sections = locate_cross_sections(&geom_kind, &movie.mask)?;
            let inlet = sections
                .iter()
                .find(|s| s.name == SectionName::Inlet)
                .ok_or_else(|| anyhow!("no inlet section"))?;
            let nv = ctflow::harness::NetworkVelocity {
                net: &net,
                height_cm: movie.height_cm,
            };
            let conc = ctflow::harness::conc_rmse_network(&net, &movie)?;
            let pred =
                ctflow::harness::velocity_timeseries(&nv, inlet, &movie.times, movie.u_c_cm_s)?;
            let truth =
                ctflow::harness::velocity_timeseries(&movie, inlet, &movie.times, movie.u_c_cm_s)?;
            let errs = ctflow::harness::decile_errors(&pred, &truth)?;
            println!("method: {method}");
            println!("conc_rmse: {conc:.4}");
            println!("vel_rmse_ms: {:.4}", errs.rmse);
            println!("high_vel_err_ms: {:.4}", errs.high_err);
            println!("low_vel_err_ms: {:.4}", errs.low_err);
            println!("vel_range_err_ms: {:.4}", errs.range_err);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config } => {
            let config = load_config(config)?;
            let outcomes = run_sweep(&config, &out)?;
            let mut records = Vec::new();
            let mut failures = 0;
            for o in &outcomes {
                match &o.result {
                    Ok(r) => {
                        println!(
                            "cell grs={} th={} {}{}: conc_rmse {:.4} vel_rmse {:.4} m/s{}",
                            o.cell.grs_hz,
                            o.cell.theta0_deg,
                            r.method,
                            o.cell
                                .pulse_width
                                .map(|pw| format!(
                                    " pw={pw} duty={:.2}",
                                    o.cell.duty_cycle.unwrap_or(1.0)
                                ))
                                .unwrap_or_default(),
                            r.conc_rmse,
                            r.vel_rmse_ms,
                            if o.resumed { " (resumed)" } else { "" }
                        );
                        records.push(r.clone());
                    }
                    Err(e) => {
                        failures += 1;
                        eprintln!(
                            "cell grs={} th={} failed: {e}",
                            o.cell.grs_hz, o.cell.theta0_deg
                        );
                    }
                }
            }
            write_metrics_csv(&records, &out.join("metrics.csv"))?;
            println!(
                "{} cells complete, {} failed -> {}",
                records.len(),
                failures,
                out.join("metrics.csv").display()
            );
            if failures > 0 {
                return Ok(ExitCode::from(EXIT_CELL_FAILURE));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { records } => {
            let csv = if records.is_dir() {
                records.join("metrics.csv")
            } else {
                records.clone()
            };
            let recs = read_metrics_csv(&csv)?;
            let files = emit_plots(&recs, &out.join("plots"))?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Threshold {
            st,
            omega_flow,
            lc_over_h,
        } => {
            let f = strouhal_threshold(&StrouhalInputs {
                st_flow: *st,
                omega_flow_rad_s: *omega_flow,
                l_c_over_h: *lc_over_h,
            })?;
            println!("{f:.3}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

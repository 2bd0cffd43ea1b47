//! Python bindings for the ctflow laboratory: the flow parameters and the
//! analytic channel solution, vessel masks, ground-truth synthesis, the
//! fan-beam scanner, filtered backprojection, network training and the
//! statistics helpers.
//!
//! Arrays cross the boundary as (shape, little-endian bytes) pairs; on the
//! Python side `numpy.frombuffer(b, dtype=...).reshape(shape)` restores
//! them.

use ctflow::ctsim::{
    add_poisson_noise, estimate_cnr, forward_project_dynamic, noisy_sinogram, FanBeamGeometry,
    ScanProtocol,
};
use ctflow::flowgen::{
    inlet_concentration, synthesize_channel_case, womersley_velocity, FieldMovie, FlowParams,
};
use ctflow::geometry::{build_bifurcation_mask, VesselGeometry};
use ctflow::grid::GridSpec;
use ctflow::harness::{paired_ttest_bonferroni, strouhal_threshold, welch_ttest, StrouhalInputs};
use ctflow::pinn::{train, FieldDomain, TrainConfig, TrainData};
use ctflow::recon::{fbp_reconstruct_frame, reconstruct_movie, ReconConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py_err(e: ctflow::CtflowError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Pulsatile channel-flow parameters.
#[pyclass(name = "FlowParams")]
#[derive(Clone)]
struct PyFlowParams {
    inner: FlowParams,
}

#[pymethods]
impl PyFlowParams {
    /// Reference configuration (u_c = 30 cm/s, H = 1.5 cm, 70 bpm).
    #[staticmethod]
    fn reference() -> Self {
        PyFlowParams {
            inner: FlowParams::paper(),
        }
    }

    #[new]
    #[pyo3(signature = (u_c_cm_s=30.0, height_cm=1.5, nu_m2_s=3.8e-6, omega_rad_s=7.33, beta=2.0, pulse_fraction=0.5))]
    fn new(
        u_c_cm_s: f64,
        height_cm: f64,
        nu_m2_s: f64,
        omega_rad_s: f64,
        beta: f64,
        pulse_fraction: f64,
    ) -> Self {
        let mut inner = FlowParams {
            u_c_cm_s,
            height_cm,
            nu_m2_s,
            omega_rad_s,
            dp_mean: 0.0,
            dp_pulse: 0.0,
            beta,
        };
        inner.set_gradients_for_peak(pulse_fraction);
        PyFlowParams { inner }
    }

    fn reynolds(&self) -> f64 {
        self.inner.reynolds()
    }

    fn strouhal(&self) -> f64 {
        self.inner.strouhal()
    }

    fn womersley_alpha(&self) -> f64 {
        self.inner.womersley_alpha()
    }

    fn cycle_period(&self) -> f64 {
        self.inner.cycle_period()
    }

    /// Streamwise velocity at nondimensional (y, t), |y| <= 1/2.
    fn velocity(&self, y: f64, t: f64) -> PyResult<f64> {
        womersley_velocity(y, t, &self.inner).map_err(to_py_err)
    }

    /// Inlet concentration trace sin^2(beta St pi t).
    fn inlet_concentration(&self, t: f64) -> f64 {
        inlet_concentration(t, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "FlowParams(Re={:.1}, St={:.4}, alpha={:.2})",
            self.reynolds(),
            self.strouhal(),
            self.womersley_alpha()
        )
    }
}

/// Vessel anatomy and its raster mask.
#[pyclass(name = "Vessel")]
struct PyVessel {
    geom: VesselGeometry,
}

#[pymethods]
impl PyVessel {
    #[staticmethod]
    fn bifurcation(height_cm: f64) -> Self {
        PyVessel {
            geom: VesselGeometry::bifurcation(height_cm),
        }
    }

    #[staticmethod]
    fn channel(height_cm: f64) -> Self {
        PyVessel {
            geom: VesselGeometry::channel(height_cm),
        }
    }

    /// Rasterize on an n x n grid over a square field of view.
    /// Returns ((ny, nx), lumen bytes, roi bytes) with 0/1 entries.
    fn rasterize<'py>(
        &self,
        py: Python<'py>,
        grid_n: usize,
        fov_cm: f64,
    ) -> PyResult<((usize, usize), Bound<'py, PyBytes>, Bound<'py, PyBytes>)> {
        let grid = GridSpec::centered_square(grid_n, fov_cm);
        let mask = build_bifurcation_mask(&self.geom, &grid).map_err(to_py_err)?;
        Ok((
            (grid.ny, grid.nx),
            PyBytes::new(py, &mask.lumen_u8()),
            PyBytes::new(py, &mask.roi_u8()),
        ))
    }

    fn lumen_area_cm2(&self, grid_n: usize, fov_cm: f64) -> PyResult<f64> {
        let grid = GridSpec::centered_square(grid_n, fov_cm);
        let mask = build_bifurcation_mask(&self.geom, &grid).map_err(to_py_err)?;
        Ok(mask.lumen_area_cm2())
    }
}

/// Ground-truth movie handle.
#[pyclass(name = "FieldMovie")]
struct PyFieldMovie {
    inner: FieldMovie,
}

#[pymethods]
impl PyFieldMovie {
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.inner.nt(), self.inner.grid.ny, self.inner.grid.nx)
    }

    /// Raw frames of one field ("c", "u", "v", "p") as f32 bytes.
    fn field_bytes<'py>(&self, py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyBytes>> {
        let field = match name {
            "c" => &self.inner.c,
            "u" => &self.inner.u,
            "v" => &self.inner.v,
            "p" => &self.inner.p,
            other => return Err(PyValueError::new_err(format!("unknown field {other}"))),
        };
        let slice = field.as_slice().expect("layout");
        let mut bytes = Vec::with_capacity(slice.len() * 4);
        for v in slice {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        Ok(PyBytes::new(py, &bytes))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner
            .save(std::path::Path::new(path))
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        FieldMovie::load(std::path::Path::new(path))
            .map(|inner| PyFieldMovie { inner })
            .map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        let (nt, ny, nx) = self.shape();
        format!("FieldMovie({nt} frames, {ny}x{nx})")
    }
}

/// Synthesize the pulsatile channel ground truth.
#[pyfunction]
fn synthesize_channel(
    params: &PyFlowParams,
    grid_n: usize,
    fov_cm: f64,
    nt: usize,
) -> PyResult<PyFieldMovie> {
    let grid = GridSpec::centered_square(grid_n, fov_cm);
    synthesize_channel_case(&params.inner, &grid, nt)
        .map(|inner| PyFieldMovie { inner })
        .map_err(to_py_err)
}

/// Sinogram handle with geometry and view bookkeeping.
#[pyclass(name = "Sinogram")]
struct PySinogram {
    inner: ctflow::ctsim::Sinogram,
}

#[pymethods]
impl PySinogram {
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_views(), self.inner.n_channels())
    }

    fn view_angles(&self) -> Vec<f64> {
        self.inner.view_angle.clone()
    }

    fn view_times(&self) -> Vec<f64> {
        self.inner.view_time.clone()
    }

    fn pulse_mask(&self) -> Vec<bool> {
        self.inner.pulse_mask.clone()
    }

    /// Line integrals as f64 bytes, shape (n_views, n_channels).
    fn g_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        let mut bytes = Vec::with_capacity(self.inner.g.len() * 8);
        for v in &self.inner.g {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        PyBytes::new(py, &bytes)
    }

    /// Re-gate with a pulsed-mode pattern.
    fn with_pulse_gating(&self, pulse_width: usize, duty_cycle: f64) -> PyResult<Self> {
        self.inner
            .with_pulse_gating(pulse_width, duty_cycle)
            .map(|inner| PySinogram { inner })
            .map_err(to_py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner
            .save(std::path::Path::new(path))
            .map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        let (v, c) = self.shape();
        format!("Sinogram({v} views x {c} channels)")
    }
}

/// Simulate a dynamic fan-beam acquisition of a movie.
#[pyfunction]
#[pyo3(signature = (movie, n_channels, views_per_rotation, grs_hz, theta0_deg, n_rotations, i0=None, seed=0))]
#[allow(clippy::too_many_arguments)]
fn scan_movie(
    movie: &PyFieldMovie,
    n_channels: usize,
    views_per_rotation: usize,
    grs_hz: f64,
    theta0_deg: f64,
    n_rotations: usize,
    i0: Option<f64>,
    seed: u64,
) -> PyResult<PySinogram> {
    let geom = FanBeamGeometry::desk(movie.inner.grid.width_cm(), n_channels, views_per_rotation);
    let mut protocol = ScanProtocol::continuous(grs_hz, theta0_deg, n_rotations);
    protocol.seed = seed;
    let mut sino = forward_project_dynamic(&movie.inner, &geom, &protocol).map_err(to_py_err)?;
    if let Some(i0) = i0 {
        sino.protocol.i0 = i0;
        sino.protocol.noise_enabled = true;
        sino = noisy_sinogram(&sino).map_err(to_py_err)?;
    }
    Ok(PySinogram { inner: sino })
}

/// Filtered backprojection of one full rotation.
/// Returns ((ny, nx), f32 bytes).
#[pyfunction]
fn fbp_frame<'py>(
    py: Python<'py>,
    sino: &PySinogram,
    grid_n: usize,
) -> PyResult<((usize, usize), Bound<'py, PyBytes>)> {
    let geom = sino.inner.geom;
    let grid = GridSpec::centered_square(grid_n, geom.fov_cm);
    let config = ReconConfig::full_rotation(&geom, grid);
    let nch = geom.n_channels;
    let rows: Vec<&[f64]> = (0..config.views_per_frame)
        .map(|v| &sino.inner.g[v * nch..(v + 1) * nch])
        .collect();
    let image = fbp_reconstruct_frame(&rows, &sino.inner.view_angle[..rows.len()], &geom, &config)
        .map_err(to_py_err)?;
    let mut bytes = Vec::with_capacity(image.len() * 4);
    for v in &image {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok(((grid.ny, grid.nx), PyBytes::new(py, &bytes)))
}

/// Reconstruct a movie (one frame per rotation) on the truth movie's grid.
#[pyfunction]
fn fbp_movie(sino: &PySinogram, movie: &PyFieldMovie) -> PyResult<PyFieldMovie> {
    let geom = sino.inner.geom;
    let config = ReconConfig::full_rotation(&geom, movie.inner.grid);
    reconstruct_movie(
        &sino.inner,
        &geom,
        &config,
        &movie.inner.mask,
        movie.inner.u_c_cm_s,
        movie.inner.height_cm,
    )
    .map(|inner| PyFieldMovie { inner })
    .map_err(to_py_err)
}

/// Train a network on a sinogram (sinoflow) or a reconstruction
/// (imageflow); returns (loss history rows, conc RMSE vs the ground
/// truth).
#[pyfunction]
#[pyo3(signature = (mode, truth, sino=None, recon=None, iterations=500, hidden_layers=3, width=24, seed=0, n_p=128))]
#[allow(clippy::too_many_arguments)]
fn train_field(
    mode: &str,
    truth: &PyFieldMovie,
    sino: Option<&PySinogram>,
    recon: Option<&PyFieldMovie>,
    iterations: usize,
    hidden_layers: usize,
    width: usize,
    seed: u64,
    n_p: usize,
) -> PyResult<(Vec<(usize, f64, f64, f64)>, f64)> {
    let movie = &truth.inner;
    let t_window = (movie.times[0], *movie.times.last().unwrap());
    let domain = FieldDomain::new(&movie.mask, movie.height_cm, movie.time_scale_s(), t_window)
        .map_err(to_py_err)?;
    let mut tc = TrainConfig::desk();
    tc.hidden_layers = hidden_layers;
    tc.width = width;
    tc.iterations = iterations;
    tc.n_p = n_p;
    tc.n_phys = 256;
    tc.n_data = 256;
    tc.n_rays = 8;
    tc.seed = seed;
    let outcome = match mode {
        "sinoflow" => {
            let sino = sino.ok_or_else(|| PyValueError::new_err("sinoflow requires sino"))?;
            train(&TrainData::SinoFlow { sino: &sino.inner }, &domain, &tc).map_err(to_py_err)?
        }
        "imageflow" => {
            let recon = recon.ok_or_else(|| PyValueError::new_err("imageflow requires recon"))?;
            train(
                &TrainData::ImageFlow {
                    recon: &recon.inner,
                },
                &domain,
                &tc,
            )
            .map_err(to_py_err)?
        }
        other => return Err(PyValueError::new_err(format!("unknown mode {other}"))),
    };
    let rmse = ctflow::harness::conc_rmse_network(&outcome.net, movie).map_err(to_py_err)?;
    let rows = outcome
        .history
        .iter()
        .map(|r| (r.iteration, r.l_physics, r.l_data, r.l_total))
        .collect();
    Ok((rows, rmse))
}

/// Minimum gantry frequency [Hz] from the advection timescale argument.
#[pyfunction]
fn threshold(st: f64, omega_flow: f64, lc_over_h: f64) -> PyResult<f64> {
    strouhal_threshold(&StrouhalInputs {
        st_flow: st,
        omega_flow_rad_s: omega_flow,
        l_c_over_h: lc_over_h,
    })
    .map_err(to_py_err)
}

/// Paired t-test with Bonferroni correction.
/// Returns (t, p_raw, p_adjusted, significant).
#[pyfunction]
fn paired_ttest(a: Vec<f64>, b: Vec<f64>, n_comparisons: usize) -> PyResult<(f64, f64, f64, bool)> {
    let r = paired_ttest_bonferroni(&a, &b, n_comparisons).map_err(to_py_err)?;
    Ok((r.t, r.p_raw, r.p_adjusted, r.significant))
}

/// Welch two-sample t-test. Returns (t, p).
#[pyfunction]
fn welch(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    welch_ttest(&a, &b).map_err(to_py_err)
}

/// Poisson counting noise with per-view deterministic seeding.
#[pyfunction]
fn poisson_counts(intensities: Vec<f64>, n_per_view: usize, seed: u64) -> PyResult<Vec<f64>> {
    add_poisson_noise(&intensities, n_per_view, seed).map_err(to_py_err)
}

/// Contrast-to-noise ratio of an image given ROI index lists.
#[pyfunction]
fn cnr(image: Vec<f32>, lumen_roi: Vec<usize>, background_roi: Vec<usize>) -> PyResult<f64> {
    estimate_cnr(&image, &lumen_roi, &background_roi).map_err(to_py_err)
}

#[pymodule]
fn ctflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyFlowParams>()?;
    m.add_class::<PyVessel>()?;
    m.add_class::<PyFieldMovie>()?;
    m.add_class::<PySinogram>()?;
    m.add_function(wrap_pyfunction!(synthesize_channel, m)?)?;
    m.add_function(wrap_pyfunction!(scan_movie, m)?)?;
    m.add_function(wrap_pyfunction!(fbp_frame, m)?)?;
    m.add_function(wrap_pyfunction!(fbp_movie, m)?)?;
    m.add_function(wrap_pyfunction!(train_field, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(paired_ttest, m)?)?;
    m.add_function(wrap_pyfunction!(welch, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_counts, m)?)?;
    m.add_function(wrap_pyfunction!(cnr, m)?)?;
    Ok(())
}

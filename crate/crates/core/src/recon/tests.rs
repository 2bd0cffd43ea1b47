use super::*;
use crate::ctsim::fanbeam::FanBeamGeometry;
use crate::ctsim::project::{forward_project_dynamic, static_movie};
use crate::ctsim::protocol::ScanProtocol;
use crate::flowgen::FlowParams;
use crate::geometry::RasterMask;

fn disk_image(grid: &GridSpec, cx: f64, cy: f64, radius: f64, value: f32) -> Vec<f32> {
    let mut img = vec![0.0f32; grid.n_pixels()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let dx = grid.x_center(ix) - cx;
            let dy = grid.y_center(iy) - cy;
            if dx * dx + dy * dy <= radius * radius {
                img[iy * grid.nx + ix] = value;
            }
        }
    }
    img
}

fn scan_static(
    img: Vec<f32>,
    grid: GridSpec,
    geom: &FanBeamGeometry,
    protocol: &ScanProtocol,
) -> crate::ctsim::Sinogram {
    let movie = static_movie(grid, img, RasterMask::full(grid));
    forward_project_dynamic(&movie, geom, protocol).unwrap()
}

#[test]
fn ramlak_kernel_is_symmetric_and_dc_suppressing() {
    let d = 4.7e-4;
    let k = ramlak_kernel(1600, d);
    let n = k.len();
    for i in 0..n / 2 {
        assert_eq!(k[i], k[n - 1 - i]);
    }
    let sum: f64 = k.iter().sum();
    let peak = k[n / 2];
    assert!(sum.abs() / peak < 1e-3, "kernel mean {} of peak", sum / peak);
}

/// Project a uniform disk and reconstruct it: interior recovers the disk
/// value, exterior stays near zero.
#[test]
fn disk_round_trip_recovers_values() {
    let grid = GridSpec::centered_square(256, 10.0);
    let rho = 1.0;
    let geom = FanBeamGeometry::desk(10.0, 256, 240);
    let protocol = ScanProtocol::continuous(4.0, 0.0, 1);
    let sino = scan_static(disk_image(&grid, 0.0, 0.0, rho, 1.0), grid, &geom, &protocol);
    let config = ReconConfig::full_rotation(&geom, grid);
    let rows: Vec<&[f64]> = (0..sino.n_views())
        .map(|v| &sino.g[v * geom.n_channels..(v + 1) * geom.n_channels])
        .collect();
    let image = fbp_reconstruct_frame(&rows, &sino.view_angle, &geom, &config).unwrap();

    let rim = 2.0 * grid.pixel_cm;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let x = grid.x_center(ix);
            let y = grid.y_center(iy);
            let r = (x * x + y * y).sqrt();
            let v = image[iy * grid.nx + ix] as f64;
            if r < rho - rim {
                inside.push(v);
            } else if r > rho + rim && r < 0.45 * grid.width_cm() {
                outside.push(v);
            }
        }
    }
    let mean_in = inside.iter().sum::<f64>() / inside.len() as f64;
    let mean_out = outside.iter().sum::<f64>() / outside.len() as f64;
    assert!((mean_in - 1.0).abs() < 0.03, "interior mean {mean_in}");
    assert!(mean_out.abs() < 0.02, "exterior mean {mean_out}");
}

#[test]
fn zero_sinogram_reconstructs_to_zero() {
    let grid = GridSpec::centered_square(128, 10.0);
    let geom = FanBeamGeometry::desk(10.0, 128, 96);
    let config = ReconConfig::full_rotation(&geom, grid);
    let zeros = vec![0.0f64; geom.n_channels];
    let rows: Vec<&[f64]> = (0..geom.views_per_rotation).map(|_| zeros.as_slice()).collect();
    let angles: Vec<f64> = (0..geom.views_per_rotation)
        .map(|v| v as f64 * 2.0 * std::f64::consts::PI / geom.views_per_rotation as f64)
        .collect();
    let image = fbp_reconstruct_frame(&rows, &angles, &geom, &config).unwrap();
    assert!(image.iter().all(|&x| (x as f64).abs() < 1e-10));
}

/// FBP is a linear operator: the reconstruction of a sum of sinograms is
/// the sum of reconstructions.
#[test]
fn reconstruction_is_linear() {
    let grid = GridSpec::centered_square(128, 10.0);
    let geom = FanBeamGeometry::desk(10.0, 128, 96);
    let protocol = ScanProtocol::continuous(4.0, 0.0, 1);
    let sino_a = scan_static(disk_image(&grid, -1.5, 0.0, 0.8, 1.0), grid, &geom, &protocol);
    let sino_b = scan_static(disk_image(&grid, 1.5, 1.0, 0.6, 0.5), grid, &geom, &protocol);
    let config = ReconConfig::full_rotation(&geom, grid);
    let recon = |g: &[f64], angles: &[f64]| {
        let rows: Vec<&[f64]> = (0..geom.views_per_rotation)
            .map(|v| &g[v * geom.n_channels..(v + 1) * geom.n_channels])
            .collect();
        fbp_reconstruct_frame(&rows, angles, &geom, &config).unwrap()
    };
    let a = recon(&sino_a.g, &sino_a.view_angle);
    let b = recon(&sino_b.g, &sino_b.view_angle);
    let summed: Vec<f64> = sino_a
        .g
        .iter()
        .zip(&sino_b.g)
        .map(|(x, y)| 2.0 * x + 3.0 * y)
        .collect();
    let ab = recon(&summed, &sino_a.view_angle);
    for k in 0..ab.len() {
        let want = 2.0 * a[k] as f64 + 3.0 * b[k] as f64;
        assert!(
            (ab[k] as f64 - want).abs() < 1e-5,
            "pixel {k}: {} vs {want}",
            ab[k]
        );
    }
}

/// A static scene reconstructs identically in every rotation.
#[test]
fn static_movie_frames_match_single_frame() {
    let grid = GridSpec::centered_square(128, 10.0);
    let geom = FanBeamGeometry::desk(10.0, 128, 96);
    let protocol = ScanProtocol::continuous(4.0, 45.0, 3);
    let sino = scan_static(disk_image(&grid, 0.5, -0.5, 1.2, 1.0), grid, &geom, &protocol);
    let config = ReconConfig::full_rotation(&geom, grid);
    let movie = reconstruct_movie(&sino, &geom, &config, &RasterMask::full(grid), 30.0, 1.5).unwrap();
    assert_eq!(movie.nt(), 3);
    let nyx = grid.n_pixels();
    let frames = movie.c.as_slice().unwrap();
    for k in 1..3 {
        for j in 0..nyx {
            let d = (frames[k * nyx + j] - frames[j]).abs();
            assert!(d < 1e-6, "frame {k} pixel {j} differs by {d}");
        }
    }
}

/// Reconstruction error of the dynamic channel scene grows as the gantry
/// slows: RMSE at 1 Hz > 4 Hz > 10 Hz.
#[test]
fn dynamic_rmse_orders_with_rotation_speed() {
    let mut params = FlowParams::paper();
    params.beta = 1.0 / std::f64::consts::PI;
    let grid = GridSpec::centered_square(160, 10.0);
    let movie = crate::flowgen::synthesize_channel_case(&params, &grid, 100).unwrap();
    let geom = FanBeamGeometry::desk(10.0, 192, 160);
    let mut rmses = Vec::new();
    for grs in [1.0, 4.0, 10.0] {
        let n_rot = ((movie.span_s() * grs) as usize).max(1);
        let protocol = ScanProtocol::continuous(grs, 0.0, n_rot);
        let sino = forward_project_dynamic(&movie, &geom, &protocol).unwrap();
        let config = ReconConfig::full_rotation(&geom, grid);
        let recon = reconstruct_movie(&sino, &geom, &config, &movie.mask, 30.0, 1.5).unwrap();
        // RMSE over ROI pixels, comparing each recon frame to the truth at
        // the frame timestamp
        let nyx = grid.n_pixels();
        let mut se = 0.0;
        let mut n = 0usize;
        for (k, &t) in recon.times.iter().enumerate() {
            let tk = movie.nearest_frame(t);
            let truth = movie.frame(crate::flowgen::Field::C, tk);
            let rec = &recon.c.as_slice().unwrap()[k * nyx..(k + 1) * nyx];
            for j in 0..nyx {
                if movie.mask.roi[j] {
                    se += (rec[j] as f64 - truth[j] as f64).powi(2);
                    n += 1;
                }
            }
        }
        rmses.push((se / n as f64).sqrt());
    }
    assert!(
        rmses[0] > rmses[1] && rmses[1] > rmses[2],
        "RMSE ordering violated: {rmses:?}"
    );
}

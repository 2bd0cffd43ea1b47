//! Ground-truth velocity and concentration movies: the analytic pulsatile
//! channel, WENO3 contrast transport, and ingestion of externally computed
//! field movies.

pub mod advect;
pub mod channel;
pub mod movie;
pub mod womersley;

pub use advect::{advect_weno3, AdvectDomain, AdvectOptions, VelocityField};
pub use channel::synthesize_channel_case;
pub use movie::{load_field_movie, Field, FieldMovie};
pub use womersley::{
    inlet_concentration, pressure, pressure_gradient, womersley_velocity, FlowParams,
};


#[cfg(test)]
mod movie_tests {
    use super::*;
    use crate::grid::GridSpec;
    use tempfile::tempdir;

    fn small_movie() -> FieldMovie {
        let mut p = FlowParams::paper();
        p.beta = 1.0 / std::f64::consts::PI;
        let grid = GridSpec::centered_square(160, 10.0);
        synthesize_channel_case(&p, &grid, 8).unwrap()
    }

    #[test]
    fn save_load_roundtrip_is_bit_identical() {
        let movie = small_movie();
        let dir = tempdir().unwrap();
        movie.save(dir.path()).unwrap();
        let back = FieldMovie::load(dir.path()).unwrap();
        assert_eq!(movie.times, back.times);
        for (a, b) in movie.c.iter().zip(back.c.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in movie.u.iter().zip(back.u.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(movie.mask.lumen, back.mask.lumen);
        assert_eq!(movie.mask.offset, back.mask.offset);
    }

    #[test]
    fn load_zeroes_velocity_outside_lumen() {
        let movie = small_movie();
        let dir = tempdir().unwrap();
        movie.save(dir.path()).unwrap();
        // corrupt the stored u with nonzero values outside the lumen
        let nyx = movie.grid.n_pixels();
        let mut raw = crate::store::read_f32(&dir.path().join("u.f32"), movie.nt() * nyx).unwrap();
        let outside = movie.mask.lumen.iter().position(|&b| !b).unwrap();
        for k in 0..movie.nt() {
            raw[k * nyx + outside] = 0.7;
        }
        crate::store::write_f32(&dir.path().join("u.f32"), &raw).unwrap();
        let back = FieldMovie::load(dir.path()).unwrap();
        assert_eq!(back.u.as_slice().unwrap()[outside], 0.0);
    }

    #[test]
    fn corrupted_shape_is_rejected() {
        let movie = small_movie();
        let dir = tempdir().unwrap();
        movie.save(dir.path()).unwrap();
        // truncate a field file
        let raw = crate::store::read_f32(
            &dir.path().join("c.f32"),
            movie.nt() * movie.grid.n_pixels(),
        )
        .unwrap();
        crate::store::write_f32(&dir.path().join("c.f32"), &raw[..raw.len() - 1]).unwrap();
        assert!(FieldMovie::load(dir.path()).is_err());
    }

    #[test]
    fn non_monotone_times_are_rejected() {
        let mut movie = small_movie();
        movie.times[2] = movie.times[1];
        assert!(movie.validate().is_err());
    }

    #[test]
    fn frame_weights_interpolate_and_clamp() {
        let movie = small_movie();
        let (lo, hi, w) = movie.frame_weights(movie.times[3] * 0.5 + movie.times[4] * 0.5);
        assert_eq!((lo, hi), (3, 4));
        assert!((w - 0.5).abs() < 1e-9);
        assert_eq!(movie.frame_weights(-1.0), (0, 0, 0.0));
        let n = movie.nt();
        assert_eq!(movie.frame_weights(1e9), (n - 1, n - 1, 0.0));
    }
}

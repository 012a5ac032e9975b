use proptest::prelude::*;

use slelab::conformal::{whitney_decompose, Raster};
use slelab::io::{read_binary, write_binary, Header};
use slelab::lab::{fit_exponent, modulus_of_continuity};
use slelab::loewner::{evolve_point, slit_inverse, DrivingFunction, Scheme};
use slelab::lqg::Region;
use slelab::rng::CounterRng;
use slelab::stochastic::{bes3_cdf, density, DensitySpec};
use slelab::C64;

proptest! {
    #[test]
    fn rng_streams_are_reproducible(seed: u64, stream: u64) {
        let mut a = CounterRng::new(seed, stream);
        let mut b = CounterRng::new(seed, stream);
        for _ in 0..16 {
            let u = a.uniform();
            prop_assert_eq!(u, b.uniform());
            prop_assert!((0.0..1.0).contains(&u));
        }
        let mut c = CounterRng::new(seed, stream.wrapping_add(1));
        let xs: Vec<f64> = (0..4).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..4).map(|_| c.uniform()).collect();
        prop_assert_ne!(xs, ys);
    }

    #[test]
    fn densities_are_nonnegative(alpha in 0.01f64..5.0, b in 0.01f64..5.0, t in 1e-3f64..10.0, x in -1.0f64..50.0) {
        for spec in [
            DensitySpec::FirstPassageDrift { alpha, b },
            DensitySpec::FirstPassageLevel0 { b },
            DensitySpec::Bes3Transition { t },
        ] {
            match density(&spec, x) {
                Ok(v) => prop_assert!(x > 0.0 && v.is_finite() && v >= 0.0, "{:?} at {}: {}", spec, x, v),
                Err(_) => prop_assert!(x <= 0.0),
            }
        }
    }

    #[test]
    fn bes3_cdf_is_monotone(t in 1e-3f64..10.0, y in 0.0f64..10.0, dy in 0.0f64..1.0) {
        let (a, b) = (bes3_cdf(t, y), bes3_cdf(t, y + dy));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn binary_round_trip(kappa in 0.1f64..16.0, dt in 1e-9f64..1.0, data in prop::collection::vec(any::<f64>(), 0..64)) {
        let h = Header { scheme: 1, kappa, dt, n: data.len() as u32 };
        let mut buf = Vec::new();
        write_binary(&mut buf, h, &data).unwrap();
        let (h2, back) = read_binary(&buf[..]).unwrap();
        prop_assert_eq!(h2, h);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&data));
    }

    #[test]
    fn packed_raster_round_trip(w in 1usize..40, h in 1usize..40, bits in prop::collection::vec(any::<bool>(), 1600)) {
        let r = Raster { width: w, height: h, origin: C64::new(-1.5, 0.25), pixel: 0.125, inside: bits[..w * h].to_vec() };
        let mut buf = Vec::new();
        r.write_packed(&mut buf).unwrap();
        prop_assert_eq!(Raster::read_packed(&buf[..]).unwrap(), r);
    }

    #[test]
    fn fit_recovers_exact_lines(slope in -3.0f64..3.0, icpt in -5.0f64..5.0, n in 5usize..12) {
        let xs: Vec<f64> = (0..n).map(|k| 0.7 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| icpt + slope * x).collect();
        let f = fit_exponent(&xs, &ys, &vec![0.1; n], 1.0, 2).unwrap();
        prop_assert!((f.exponent - slope).abs() < 1e-9);
        prop_assert!(f.residuals.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn modulus_is_monotone_and_exact(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..60)) {
        let pts: Vec<C64> = pts.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let lags: Vec<usize> = (1..pts.len()).collect();
        let m = modulus_of_continuity(&pts, &lags);
        prop_assert!(m.windows(2).all(|w| w[1] >= w[0]));
        let diam = pts.iter().flat_map(|a| pts.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
        prop_assert_eq!(*m.last().unwrap(), diam);
    }

    #[test]
    fn slit_inverse_maps_into_upper_half_plane(re in -5.0f64..5.0, im in 1e-3f64..5.0, b in -2.0f64..2.0, dt in 1e-6f64..0.1) {
        let z = slit_inverse(C64::new(re, im), b, dt);
        prop_assert!(z.im > 0.0);
        // Forward slit map: g(z) = b + sqrt((z-b)^2 + 4dt).
        let g = b + ((z - b) * (z - b) + 4.0 * dt).sqrt();
        let g = if g.im < 0.0 { 2.0 * b - g } else { g };
        prop_assert!((g - C64::new(re, im)).norm() < 1e-8 * (1.0 + re.abs() + im));
    }

    #[test]
    fn rectangles_split_without_overlap(x0 in -2.0f64..0.0, w in 0.1f64..2.0, cut in 0.0f64..1.0, y in -1.0f64..1.0) {
        let (x1, xm) = (x0 + w, x0 + cut * w);
        let whole = Region::Rect { x0, x1, y0: -1.0, y1: 1.0 };
        let l = Region::Rect { x0, x1: xm, y0: -1.0, y1: 1.0 };
        let r = Region::Rect { x0: xm, x1, y0: -1.0, y1: 1.0 };
        for k in 0..50 {
            let z = C64::new(x0 - 0.1 + (w + 0.2) * k as f64 / 49.0, y);
            prop_assert_eq!(whole.contains(z), l.contains(z) ^ r.contains(z));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_drive_matches_closed_form(re in -2.0f64..2.0, im in 0.2f64..2.0, w0 in -1.0f64..1.0) {
        let d = DrivingFunction::from_values(Scheme::Sle, 0.0, 1e-2, vec![w0; 51]);
        let z = C64::new(re, im);
        let g = evolve_point(&d, z, 0.5).unwrap().value().unwrap();
        let mut want = w0 + ((z - w0) * (z - w0) + 2.0).sqrt();
        if want.im < 0.0 {
            want = 2.0 * w0 - want;
        }
        prop_assert!((g - want).norm() < 1e-6, "{} vs {}", g, want);
    }

    #[test]
    fn whitney_cells_on_random_rectangles(a in 0.2f64..0.9, b in 0.2f64..0.9, cx in -0.05f64..0.05) {
        let px = 1.0 / 128.0;
        let r = Raster::centered(1.0, px, |z| (z.re - cx).abs() < a && z.im.abs() < b);
        let dec = whitney_decompose(&r, 6).unwrap();
        for c in &dec.cells {
            prop_assert!(c.diam() <= c.dist * (1.0 + 1e-12));
            prop_assert!(r.contains(c.center));
        }
        prop_assert_eq!(dec.components, 1);
    }
}

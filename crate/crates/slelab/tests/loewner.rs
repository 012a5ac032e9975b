use std::f64::consts::PI;

use slelab::loewner::*;
use slelab::quad::simpson;
use slelab::stats::histogram_l1;
use slelab::C64;

fn zero_driving(dt: f64, horizon: f64) -> DrivingFunction {
    let n = (horizon / dt).round() as usize;
    DrivingFunction::from_values(Scheme::Sle, 0.0, dt, vec![0.0; n + 1])
}

/// Branch of sqrt(z^2 + c) asymptotic to z at infinity, for z in H.
fn sqrt_slit(z: C64, c: f64) -> C64 {
    let s = (z * z + c).sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

const PROBES: [C64; 5] = [
    C64::new(0.3, 0.2),
    C64::new(-1.5, 0.05),
    C64::new(0.0, 2.5),
    C64::new(2.5, 1.5),
    C64::new(-0.1, 0.9),
];

#[test]
fn forward_flow_with_zero_driving_is_the_slit_map() {
    let d = zero_driving(1e-4, 1.0);
    for z in PROBES {
        for t in [0.25, 1.0] {
            let g = evolve_point(&d, z, t).unwrap().value().unwrap();
            let want = sqrt_slit(z, 4.0 * t);
            assert!((g - want).norm() < 1e-6, "z={z} t={t}: {g} vs {want}");
        }
    }
}

#[test]
fn reverse_flow_with_zero_driving_is_the_inverse_slit_map() {
    let d = zero_driving(1e-4, 1.0);
    for z in PROBES {
        let g = evolve_reverse(&d, z, 1.0).unwrap();
        let want = sqrt_slit(z, -4.0);
        assert!((g - want).norm() < 1e-6, "z={z}: {g} vs {want}");
        assert!(g.im >= 0.0);
    }
    // The slit tip at time 1 is 2i: the forward flow swallows it then.
    let tip = evolve_point(&d, C64::new(0.0, 2.0), 1.0).unwrap();
    assert!(matches!(tip, PointEvolution::Swallowed(t) if (t - 1.0).abs() < 1e-3), "{tip:?}");
}

#[test]
fn slit_inverse_is_a_right_inverse_of_the_slit_map() {
    let (b, dt) = (0.4, 0.01);
    assert!((slit_inverse(C64::new(b, 0.0), b, dt) - C64::new(b, 0.2)).norm() < 1e-14);
    for w in PROBES {
        let z = slit_inverse(w, b, dt);
        assert!(z.im > 0.0);
        let back = b + sqrt_slit(z - b, 4.0 * dt);
        assert!((back - w).norm() < 1e-12, "{w} -> {z} -> {back}");
    }
    // Conjugate symmetry.
    let w = C64::new(0.7, 0.3);
    assert!((slit_inverse(w.conj(), b, dt) - slit_inverse(w, b, dt).conj()).norm() < 1e-14);
}

#[test]
fn vertical_segment_capacity() {
    for h in [0.5, 1.0, 3.0] {
        let pts: Vec<C64> = (0..=400).map(|k| C64::new(0.2, h * k as f64 / 400.0)).collect();
        let c = hull_capacity(&pts);
        assert!((c - h * h / 2.0).abs() < 1e-3 * h * h, "h={h}: {c}");
    }
    assert_eq!(hull_capacity(&[C64::new(1.0, 0.0)]), 0.0);
    assert_eq!(sup_im(&[C64::new(0.0, 0.5), C64::new(1.0, 2.0), C64::new(3.0, 1.0)]), 2.0);
}

#[test]
fn sle_hull_capacity_is_twice_the_time() {
    let mut checked = 0;
    for kappa in [1.0, 2.0, 4.0, 6.0, 8.0] {
        for seed in 0..4 {
            let d = generate_driving(Scheme::Sle, kappa, &[], 1e-3, 1.0, seed, &DrivingOptions::default()).unwrap();
            let tr = extract_trace(&d).unwrap();
            assert_eq!(tr.parameterization, Parameterization::Capacity);
            assert!(tr.points.iter().all(|z| z.im >= 0.0));
            for &t in &[0.25, 1.0] {
                let m = (t / d.dt).round() as usize;
                let hull = &tr.points[..=m];
                let c = hull_capacity(hull);
                assert!((c / (2.0 * t) - 1.0).abs() < 0.02, "kappa={kappa} seed={seed} t={t}: hcap {c}");
                assert!(c >= sup_im(hull).powi(2) / 2.0);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 40);
}

#[test]
fn zipper_matches_direct_tip_extraction() {
    let d = generate_driving(Scheme::Sle, 3.0, &[], 1e-3, 0.3, 17, &DrivingOptions::default()).unwrap();
    let a = extract_trace(&d).unwrap();
    let b = extract_trace_direct(&d).unwrap();
    assert_eq!(a.len(), b.len());
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p - q).norm() < 1e-9, "{p} vs {q}");
    }
}

#[test]
fn grid_traces_agree_with_uniform_traces() {
    let d = generate_driving(Scheme::Sle, 4.0, &[], 1e-3, 0.5, 2, &DrivingOptions::default()).unwrap();
    let a = extract_trace(&d).unwrap();
    let times: Vec<f64> = (0..d.w.len()).map(|i| d.time(i)).collect();
    let b = trace_on_grid(&times, &d.w).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p - q).norm() < 1e-12);
    }
    // A geometric grid with zero driving still traces the vertical slit.
    let times: Vec<f64> = std::iter::once(0.0).chain((0..60).map(|k| 1e-6 * 1.25f64.powi(k))).collect();
    let tr = trace_on_grid(&times, &vec![0.0; times.len()]).unwrap();
    for (z, t) in tr.points.iter().zip(&times) {
        assert!((z - C64::new(0.0, 2.0 * t.sqrt())).norm() < 1e-9 * (1.0 + t.sqrt()));
    }
    assert!(trace_on_grid(&[0.0, 1.0, 0.5], &[0.0; 3]).is_err());
}

#[test]
fn composer_tips_are_trace_points() {
    let d = generate_driving(Scheme::Sle, 2.0, &[], 1e-3, 0.2, 5, &DrivingOptions::default()).unwrap();
    let comp = SlitComposer::new(d.w[1..].to_vec(), d.dt);
    let tr = extract_trace(&d).unwrap();
    assert_eq!(comp.len(), d.steps());
    for m in [1, 7, 64, 100, 200] {
        assert!((comp.tip(m) - tr.points[m]).norm() < 1e-12);
    }
}

#[test]
fn whole_plane_slit_has_koebe_length() {
    // Constant driving: the hull is a radial slit of length 4 e^t.
    let (t0, dt) = (-8.0, 1e-3);
    let n = (8.0 / dt) as usize;
    let d = DrivingFunction::whole_plane_from_angles(0.0, t0, dt, vec![0.0; n + 1], vec![PI; n + 1]);
    let tr = whole_plane_trace(&d, 1000).unwrap();
    assert_eq!(tr.parameterization, Parameterization::RadialCapacity);
    for (z, t) in tr.points.iter().zip(&tr.times).skip(4) {
        let want = 4.0 * t.exp();
        assert!((z - want).norm() < 1e-2 * want, "t={t}: {z} vs {want}");
    }
    // Normalisation at infinity: g_t(z) ~ e^{-t} z.
    let z = C64::new(3e3, 1e3);
    let g = evolve_whole_plane(&d, z, t0, 0.0).unwrap().value().unwrap();
    assert!((g / z - 1.0).norm() < 1e-3);
    // Points of the starting circle stay on the unit circle.
    let u = whole_plane_boundary_image(&d, 2.0, 0.0).unwrap();
    assert!((u.norm() - 1.0).abs() < 1e-12);
    // Inverse then forward returns the point.
    let w = C64::new(1.5, 0.7);
    let z = inverse_whole_plane(&d, w, 0.0).unwrap();
    let back = evolve_whole_plane(&d, z, t0, 0.0).unwrap().value().unwrap();
    assert!((back - w).norm() < 1e-6, "{back} vs {w}");
}

#[test]
fn radial_flow_has_capacity_normalisation() {
    let d = DrivingFunction::whole_plane_from_angles(2.0, 0.0, 1e-3, vec![1.0; 1001], vec![2.0; 1001]);
    let z = C64::new(1e-5, 2e-5);
    let g = evolve_radial(&d, z, 0.0, 0.5).unwrap().value().unwrap();
    assert!(((g / z).norm().ln() - 0.5).abs() < 1e-4);
    assert!(evolve_radial(&d, C64::new(1.2, 0.0), 0.0, 0.5).is_err());
}

#[test]
fn whole_plane_driving_lives_on_the_circle() {
    let rho = [ForcePoint { rho: 2.0, side: Side::Right, offset: 0.0 }];
    let opts = DrivingOptions { r0: Some(1e-3), ..DrivingOptions::default() };
    let d = generate_driving(Scheme::WholePlaneRho, 4.0, &rho, 1e-3, 0.5, 8, &opts).unwrap();
    assert!((d.t0 - 1e-3f64.ln()).abs() < 1e-12);
    for i in (0..d.w.len()).step_by(97) {
        assert!((d.w_unit(i).norm() - 1.0).abs() < 1e-14);
        assert!((d.o_unit(i).unwrap().norm() - 1.0).abs() < 1e-14);
    }
    assert!(generate_driving(Scheme::WholePlaneRho, 4.0, &[], 1e-3, 0.5, 8, &opts).is_err());
}

#[test]
fn force_points_stay_on_their_side() {
    let rho = [
        ForcePoint { rho: 1.0, side: Side::Right, offset: 0.0 },
        ForcePoint { rho: -0.5, side: Side::Left, offset: 0.3 },
    ];
    for seed in 0..5 {
        let d = generate_driving(Scheme::SleRho, 4.0, &rho, 1e-4, 0.5, seed, &DrivingOptions::default()).unwrap();
        let n = d.v[0].len();
        for i in 0..n {
            assert!(d.v[0][i] >= d.w[i] - 1e-12, "right point crossed W at step {i}");
            assert!(d.v[1][i] <= d.w[i] + 1e-12, "left point crossed W at step {i}");
        }
    }
    let at_threshold = [ForcePoint { rho: -2.0, side: Side::Right, offset: 0.5 }];
    assert!(generate_driving(Scheme::SleRho, 4.0, &at_threshold, 1e-3, 1.0, 0, &DrivingOptions::default()).is_err());
}

#[test]
fn reverse_angle_invariant_density() {
    let kappa = 2.0;
    let e = 8.0 / kappa - 2.0;
    let norm = simpson(|y| y.sin().powf(e), 0.0, PI, 2000);
    let mut ys = Vec::new();
    for seed in 0..8 {
        let p = sample_reverse_theta(kappa, PI / 2.0, 1e-3, 200.0, seed).unwrap();
        ys.extend(p.values.iter().skip(5000).step_by(25));
    }
    let l1 = histogram_l1(&ys, 0.0, PI, 30, |y| y.sin().powf(e) / norm);
    assert!(l1 < 0.1, "L1 {l1}");
}

#[test]
fn driving_record_helpers() {
    for s in [Scheme::Sle, Scheme::SleRho, Scheme::WholePlaneRho, Scheme::ReverseSleKappa] {
        assert_eq!(Scheme::from_id(s.id()), Some(s));
    }
    assert_eq!(Scheme::from_id(0), None);
    let d = DrivingFunction::from_values(Scheme::Sle, 2.0, 0.5, vec![0.0, 1.0, 3.0]);
    assert_eq!(d.horizon(), 1.0);
    assert_eq!(d.w_at(0.25), 0.5);
    let r = d.time_reversed(Scheme::Sle);
    assert_eq!(r.w, vec![0.0, -2.0, -3.0]);
    assert_eq!(d.truncate_to(1).w, vec![0.0, 1.0]);
    assert!(generate_driving(Scheme::Sle, -1.0, &[], 0.1, 1.0, 0, &DrivingOptions::default()).is_err());
    assert!(generate_driving(Scheme::Sle, 2.0, &[], 0.0, 1.0, 0, &DrivingOptions::default()).is_err());
}

#[test]
fn whole_plane_hull_law_does_not_depend_on_r0() {
    // Outer radius of the capacity-one hull; always in [1, 4].
    let rho = [ForcePoint { rho: 2.0, side: Side::Right, offset: 0.0 }];
    let sample = |r0: f64, base: u64| -> Vec<f64> {
        let opts = DrivingOptions { r0: Some(r0), ..DrivingOptions::default() };
        (0..80)
            .map(|k| {
                let d = generate_driving(Scheme::WholePlaneRho, 4.0, &rho, 1e-2, 0.0, base + k, &opts).unwrap();
                let tr = whole_plane_trace(&d, 1).unwrap();
                tr.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .collect()
    };
    let a = sample(1e-2, 0);
    let b = sample(1e-4, 1000);
    assert!(a.iter().chain(&b).all(|&r| (0.95..=4.05).contains(&r)));
    let (_, p) = slelab::stats::ks_two_sample(&a, &b);
    assert!(p > 1e-3, "KS p {p}");
}

use slelab::lqg::{
    intensity_profile, lqg_area, lqg_boundary, moment_scaling, Averaged, BoundaryInterval, IntensityOptions,
    MomentOptions, Pullback, Region,
};
use slelab::{Error, Result, C64};

/// `h(z) = a Re z + c`: harmonic, so every circle average is the centre value.
struct Affine {
    a: f64,
    c: f64,
}

impl Averaged for Affine {
    fn circle(&self, z: C64, _r: f64) -> Result<f64> {
        Ok(self.a * z.re + self.c)
    }
    fn semicircle(&self, x: C64, _r: f64) -> Result<f64> {
        Ok(self.a * x.re + self.c)
    }
}

fn flat(c: f64) -> Affine {
    Affine { a: 0.0, c }
}

#[test]
fn constant_field_area_is_scaled_lebesgue() {
    let (eps, gamma, c) = (1.0 / 16.0, 1.2, 0.3);
    let rect = Region::Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 0.5 };
    let m = lqg_area(&flat(c), rect, eps, gamma).unwrap();
    let want = 0.5 * eps.powf(gamma * gamma / 2.0) * (gamma * c).exp();
    assert!((m.value / want - 1.0).abs() < 1e-12, "{} vs {want}", m.value);

    let disk = Region::Disk { center: C64::new(0.3, 0.4), radius: 0.5 };
    let m = lqg_area(&flat(0.0), disk, 1.0 / 256.0, gamma).unwrap();
    let want = std::f64::consts::PI * 0.25 * (1.0f64 / 256.0).powf(gamma * gamma / 2.0);
    assert!((m.value / want - 1.0).abs() < 0.01);
}

#[test]
fn adjacent_rectangles_add() {
    let f = Affine { a: 0.7, c: -0.2 };
    let (eps, g) = (1.0 / 32.0, 1.0);
    let r = |x0, x1| Region::Rect { x0, x1, y0: 0.0, y1: 1.0 };
    let whole = lqg_area(&f, r(0.0, 1.0), eps, g).unwrap().value;
    let parts = lqg_area(&f, r(0.0, 0.375), eps, g).unwrap().value + lqg_area(&f, r(0.375, 1.0), eps, g).unwrap().value;
    assert!((whole - parts).abs() < 1e-12 * whole);
}

#[test]
fn pullback_rescales_and_shifts() {
    let f = Affine { a: 1.5, c: 0.0 };
    let p = Pullback { field: &f, scale: 2.0, shift: 0.25 };
    let z = C64::new(0.4, 1.0);
    assert!((p.circle(z, 0.1).unwrap() - (1.5 * 0.8 + 0.25)).abs() < 1e-12);
    assert!((p.semicircle(C64::new(-1.0, 0.0), 0.1).unwrap() - (-3.0 + 0.25)).abs() < 1e-12);
}

#[test]
fn boundary_measures_on_flat_fields() {
    let iv = BoundaryInterval { a: -0.5, b: 1.5, y: 0.0 };
    let eps = 1.0 / 64.0;
    let m = lqg_boundary(&flat(0.4), iv, eps, 1.0, false).unwrap();
    let want = 2.0 * eps.powf(0.25) * 0.2f64.exp();
    assert!((m.value / want - 1.0).abs() < 1e-12);

    let m = lqg_boundary(&flat(0.0), iv, eps, 2.0, true).unwrap();
    let want = 2.0 * eps * (1.0 / eps).ln();
    assert!((m.value / want - 1.0).abs() < 1e-12);
    assert_eq!(m.clamped_fraction, 0.0);

    // h_eps/2 above log(1/eps): every cell negative and clamped.
    let m = lqg_boundary(&flat(20.0), iv, eps, 2.0, true).unwrap();
    assert_eq!(m.value, 0.0);
    assert_eq!(m.clamped_fraction, 1.0);
}

#[test]
fn parameter_errors() {
    let iv = BoundaryInterval { a: 0.0, b: 1.0, y: 0.0 };
    let rect = Region::Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    assert!(matches!(lqg_boundary(&flat(0.0), iv, 0.1, 1.5, true), Err(Error::InvalidParameter(_))));
    assert!(lqg_area(&flat(0.0), rect, 0.1, 2.5).is_err());
    assert!(lqg_area(&flat(0.0), rect, 0.0, 1.0).is_err());
    let opts = MomentOptions::default();
    let eps = [0.25, 0.125];
    // p must stay below min(2/gamma^2, 3/2) and be nonzero.
    assert!(moment_scaling(std::f64::consts::SQRT_2, 1.0, 1.0, &eps, 4, &opts).is_err());
    assert!(moment_scaling(1.0, 1.0, 1.5, &eps, 4, &opts).is_err());
    assert!(moment_scaling(1.0, 1.0, 0.0, &eps, 4, &opts).is_err());
    assert!(moment_scaling(1.0, 1.0, 1.4, &eps, 4, &opts).is_ok());
    let near_axis = [C64::new(0.0, 0.05)];
    assert!(intensity_profile(1.0, 0.0, &near_axis, 0.02, 4, &IntensityOptions::default()).is_err());
}

#[test]
fn moment_slope_small_run() {
    let gamma = std::f64::consts::SQRT_2;
    let eps: Vec<f64> = (2..=6).map(|k| 2f64.powi(-k)).collect();
    let res = moment_scaling(gamma, 1.0, 0.5, &eps, 1500, &MomentOptions { seed: 3, ..Default::default() }).unwrap();
    assert_eq!(res.points.len(), eps.len());
    assert!(res.points.windows(2).all(|w| w[1].estimate < w[0].estimate));
    let target = 0.5 * gamma;
    assert!((res.slope - target).abs() < 0.2, "slope {} target {target}", res.slope);
}

#[test]
fn intensity_small_run() {
    let gamma = 1.0;
    let pts: Vec<C64> = [0.8, 0.4, 0.2].iter().map(|&y| C64::new(0.0, y)).collect();
    let opts = IntensityOptions { seed: 5, ..Default::default() };
    let prof = intensity_profile(gamma, 0.0, &pts, 0.02, 300, &opts).unwrap();
    let slope = prof.im_fit.as_ref().unwrap().slope;
    assert!((slope + gamma * gamma / 2.0).abs() < 0.15, "slope {slope}");
    for (q, b) in prof.points.iter().zip(&prof.baseline) {
        assert!((q.estimate - b).abs() < 1e-12 * b, "alpha = 0 must equal its baseline");
    }
}

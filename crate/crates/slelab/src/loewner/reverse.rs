use super::driving::DrivingFunction;
use super::flow::{integrate, FlowEnd};
use crate::error::{ensure, Error, Result};
use crate::rng::CounterRng;
use crate::stochastic::{ProcessKind, SamplePath};
use crate::C64;

/// Reverse Loewner flow ∂ĝ = -2/(ĝ - Ŵ) with ĝ₀(z) = z, for z in the closed
/// upper half-plane. Works with any real driving record.
pub fn evolve_reverse(driving: &DrivingFunction, z: C64, t: f64) -> Result<C64> {
    ensure(z.im >= 0.0, || format!("z must lie in the closed upper half-plane, got {z}"))?;
    ensure(t >= driving.t0 && t <= driving.horizon() + 1e-12, || format!("t={t} outside driving horizon"))?;
    let end = integrate(
        |g, w| -2.0 / (g - w),
        |s| C64::new(driving.w_at(s), 0.0),
        z,
        driving.t0,
        t,
        driving.t0,
        driving.dt,
        0.0,
    )?;
    match end {
        FlowEnd::At(g) => Ok(C64::new(g.re, g.im.max(0.0))),
        FlowEnd::Swallowed(s) => Err(Error::StepInstability { t: s, msg: "reverse flow started on the driving point".into() }),
    }
}

/// Euler path of dθ = √κ sin θ dB + 2 sin 2θ ds, the angle of the reverse
/// force point after the time change ds = |Q̂|^{-2} dt. Its invariant
/// density is proportional to sin^{8/κ-2}.
pub fn sample_reverse_theta(kappa: f64, theta0: f64, ds: f64, horizon: f64, seed: u64) -> Result<SamplePath> {
    use std::f64::consts::PI;
    ensure(kappa > 0.0, || "kappa must be positive".into())?;
    ensure(theta0 > 0.0 && theta0 < PI, || "theta0 must lie in (0, pi)".into())?;
    ensure(ds > 0.0 && ds <= horizon, || "need 0 < ds <= S".into())?;
    let mut rng = CounterRng::new(seed, 0);
    let n = ((horizon / ds).round() as usize).max(1);
    let sk = (kappa * ds).sqrt();
    let mut th = theta0;
    let mut values = Vec::with_capacity(n + 1);
    let mut hits = Vec::new();
    values.push(th);
    for i in 0..n {
        let mut next = th + 2.0 * (2.0 * th).sin() * ds + sk * th.sin() * rng.normal();
        if !(next > 0.0 && next < PI) {
            next = next.rem_euclid(2.0 * PI);
            if next > PI {
                next = 2.0 * PI - next;
            }
            next = next.clamp(1e-9, PI - 1e-9);
            hits.push(i + 1);
        }
        th = next;
        values.push(th);
    }
    let mut params = std::collections::BTreeMap::new();
    params.insert("kappa".into(), kappa);
    Ok(SamplePath {
        times: (0..=n).map(|i| i as f64 * ds).collect(),
        values,
        values_im: None,
        kind: ProcessKind::Custom,
        params,
        dt: ds,
        seed,
        boundary_hits: hits,
    })
}


use serde::{Deserialize, Serialize};

use super::driving::DrivingFunction;
use super::flow::{integrate, FlowEnd, SWALLOW_TOL};
use super::zipper::SlitComposer;
use super::{Parameterization, Trace};
use crate::error::{ensure, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PointEvolution {
    Value(C64),
    Swallowed(f64),
}

impl PointEvolution {
    pub fn value(self) -> Option<C64> {
        match self {
            PointEvolution::Value(z) => Some(z),
            PointEvolution::Swallowed(_) => None,
        }
    }
}

/// Inverse of the vertical slit map with base `b` and height 2√dt:
/// w -> b + sqrt((w-b)² - 4dt), branch mapping H into H and conjugate-symmetric.
#[inline]
pub fn slit_inverse(w: C64, b: f64, dt: f64) -> C64 {
    let z = w - b;
    let four = 4.0 * dt;
    if z.im == 0.0 {
        let x = z.re;
        return if x * x >= four {
            C64::new(b + x.signum() * (x * x - four).sqrt(), 0.0)
        } else {
            C64::new(b, (four - x * x).sqrt())
        };
    }
    let mut s = (z * z - four).sqrt();
    if (s.im < 0.0) != (z.im < 0.0) {
        s = -s;
    }
    b + s
}

/// Forward slit map restricted to the real line; `side` resolves x = b.
#[inline]
pub(crate) fn slit_forward_real(x: f64, b: f64, dt: f64, side: f64) -> f64 {
    let d = x - b;
    let s = if d == 0.0 { side } else { d.signum() };
    b + s * (d * d + 4.0 * dt).sqrt()
}

/// Forward vertical slit map z -> b + sqrt((z-b)² + h²), branch ~ z at infinity.
#[inline]
pub(crate) fn slit_forward(z: C64, b: f64, h2: f64) -> C64 {
    let u = z - b;
    if u.im == 0.0 {
        return C64::new(b + u.re.signum() * (u.re * u.re + h2).sqrt(), 0.0);
    }
    let mut s = (u * u + h2).sqrt();
    if (s.im < 0.0) != (u.im < 0.0) {
        s = -s;
    }
    b + s
}

/// Solves the chordal Loewner equation ∂g = 2/(g - W) for one point.
pub fn evolve_point(driving: &DrivingFunction, z: C64, t_end: f64) -> Result<PointEvolution> {
    ensure(z.im > 0.0, || format!("z must lie in the upper half-plane, got {z}"))?;
    ensure(t_end <= driving.horizon() + 1e-12 && t_end >= driving.t0, || {
        format!("t_end={t_end} outside driving horizon [{}, {}]", driving.t0, driving.horizon())
    })?;
    let end = integrate(
        |g, w| 2.0 / (g - w),
        |t| C64::new(driving.w_at(t), 0.0),
        z,
        driving.t0,
        t_end,
        driving.t0,
        driving.dt,
        SWALLOW_TOL,
    )?;
    Ok(match end {
        FlowEnd::At(g) => PointEvolution::Value(g),
        FlowEnd::Swallowed(t) => PointEvolution::Swallowed(t),
    })
}

fn check_chordal(d: &DrivingFunction) -> Result<()> {
    ensure(d.scheme.is_chordal(), || format!("trace extraction needs a chordal driving, got {:?}", d.scheme))?;
    ensure(d.w.len() >= 2, || "driving has no steps".into())
}

/// Tip trajectory by composition of inverse vertical-slit maps, one per step.
pub fn extract_trace(driving: &DrivingFunction) -> Result<Trace> {
    check_chordal(driving)?;
    let comp = SlitComposer::new(driving.w[1..].to_vec(), driving.dt);
    let n = comp.len();
    let mut points = Vec::with_capacity(n + 1);
    points.push(C64::new(driving.w[0], 0.0));
    for m in 1..=n {
        let p = comp.tip(m);
        points.push(C64::new(p.re, p.im.max(0.0)));
    }
    Ok(Trace { points, times: (0..=n).map(|i| driving.time(i)).collect(), parameterization: Parameterization::Capacity })
}

/// Same as [`extract_trace`] with plain O(N²) composition; used as a reference.
pub fn extract_trace_direct(driving: &DrivingFunction) -> Result<Trace> {
    check_chordal(driving)?;
    let n = driving.steps();
    let dt = driving.dt;
    let mut points = Vec::with_capacity(n + 1);
    points.push(C64::new(driving.w[0], 0.0));
    for m in 1..=n {
        let mut w = C64::new(driving.w[m], 2.0 * dt.sqrt());
        for k in (1..m).rev() {
            w = slit_inverse(w, driving.w[k], dt);
        }
        points.push(C64::new(w.re, w.im.max(0.0)));
    }
    Ok(Trace { points, times: (0..=n).map(|i| driving.time(i)).collect(), parameterization: Parameterization::Capacity })
}

/// Tip trajectory for a driving sampled on a non-uniform grid `times`
/// (starting at 0), with step k using the base `w[k+1]`.
pub fn trace_on_grid(times: &[f64], w: &[f64]) -> Result<Trace> {
    ensure(times.len() == w.len() && times.len() >= 2, || "need matching times and values, at least two".into())?;
    ensure(times.windows(2).all(|p| p[1] > p[0]), || "times must increase".into())?;
    let dts: Vec<f64> = times.windows(2).map(|p| p[1] - p[0]).collect();
    let comp = SlitComposer::with_steps(w[1..].to_vec(), dts);
    let mut points = Vec::with_capacity(w.len());
    points.push(C64::new(w[0], 0.0));
    for m in 1..w.len() {
        let p = comp.tip(m);
        points.push(C64::new(p.re, p.im.max(0.0)));
    }
    Ok(Trace { points, times: times.to_vec(), parameterization: Parameterization::Capacity })
}

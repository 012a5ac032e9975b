use super::chordal::PointEvolution;
use super::driving::{DrivingFunction, Scheme};
use super::flow::{integrate, FlowEnd, SWALLOW_TOL};
use super::{Parameterization, Trace};
use crate::error::{ensure, Error, Result};
use crate::C64;

/// Offset from the circle used to start the backward flow at a tip.
const TIP_OFFSET: f64 = 1e-9;

#[inline]
fn field(g: C64, w: C64) -> C64 {
    g * (w + g) / (w - g)
}

fn drive(d: &DrivingFunction) -> impl Fn(f64) -> C64 + '_ {
    move |t| C64::from_polar(1.0, d.w_at(t))
}

fn check(d: &DrivingFunction, t0: f64, t1: f64) -> Result<()> {
    ensure(d.scheme == Scheme::WholePlaneRho, || format!("needs a whole-plane driving, got {:?}", d.scheme))?;
    let (lo, hi) = (d.t0 - 1e-12, d.horizon() + 1e-12);
    ensure(t0 >= lo && t0 <= hi && t1 >= lo && t1 <= hi, || {
        format!("times [{t0}, {t1}] outside driving horizon [{}, {}]", d.t0, d.horizon())
    })
}

fn to_evolution(end: FlowEnd) -> PointEvolution {
    match end {
        FlowEnd::At(g) => PointEvolution::Value(g),
        FlowEnd::Swallowed(t) => PointEvolution::Swallowed(t),
    }
}

/// Whole-plane Loewner flow ∂g = g(W+g)/(W-g) for an exterior point.
///
/// The chain is taken to start at `t0` from the disk of radius e^{t0}, so
/// g_{t0}(z) = e^{-t0} z; the result is g_{t1}(z).
pub fn evolve_whole_plane(d: &DrivingFunction, z: C64, t0: f64, t1: f64) -> Result<PointEvolution> {
    check(d, t0, t1)?;
    ensure(t1 >= t0, || "t1 must not precede t0".into())?;
    let g0 = z * (-t0).exp();
    ensure(g0.norm() > 1.0, || format!("z={z} lies inside the starting disk of radius {}", t0.exp()))?;
    let end = integrate(field, drive(d), g0, t0, t1, d.t0, d.dt, SWALLOW_TOL)?;
    if let FlowEnd::At(g) = end {
        if g.norm() <= 1.0 {
            return Ok(PointEvolution::Swallowed(t1));
        }
    }
    Ok(to_evolution(end))
}

/// Radial Loewner flow inside the unit disk, with g_{t0}(z) = z.
pub fn evolve_radial(d: &DrivingFunction, z: C64, t0: f64, t1: f64) -> Result<PointEvolution> {
    check(d, t0, t1)?;
    ensure(z.norm() < 1.0, || format!("z={z} must lie in the unit disk"))?;
    Ok(to_evolution(integrate(field, drive(d), z, t0, t1, d.t0, d.dt, SWALLOW_TOL)?))
}

/// g_t^{-1}(w) for |w| > 1, by integrating the flow backward to the start.
pub fn inverse_whole_plane(d: &DrivingFunction, w: C64, t: f64) -> Result<C64> {
    check(d, d.t0, t)?;
    match integrate(field, drive(d), w, t, d.t0, d.t0, d.dt, 0.0)? {
        FlowEnd::At(u) => Ok(u * d.t0.exp()),
        FlowEnd::Swallowed(s) => Err(Error::StepInstability { t: s, msg: "backward flow hit the driving point".into() }),
    }
}

/// Image under g_t of a point on the boundary of the starting disk, given
/// by its angle; boundary points move along the unit circle.
pub fn whole_plane_boundary_image(d: &DrivingFunction, angle: f64, t: f64) -> Result<C64> {
    check(d, d.t0, t)?;
    match integrate(field, drive(d), C64::from_polar(1.0, angle), d.t0, t, d.t0, d.dt, 0.0)? {
        FlowEnd::At(u) => Ok(u / u.norm()),
        FlowEnd::Swallowed(s) => Err(Error::StepInstability { t: s, msg: "boundary point reached the driving point".into() }),
    }
}

/// Tips g_t^{-1}(W_t) at every `stride`-th grid time.
pub fn whole_plane_trace(d: &DrivingFunction, stride: usize) -> Result<Trace> {
    ensure(d.scheme == Scheme::WholePlaneRho, || "needs a whole-plane driving".into())?;
    let stride = stride.max(1);
    let mut points = Vec::new();
    let mut times = Vec::new();
    let n = d.steps();
    points.push(d.w_unit(0) * d.t0.exp());
    times.push(d.t0);
    let mut i = stride;
    while i <= n {
        let t = d.time(i);
        let start = d.w_unit(i) * (1.0 + TIP_OFFSET);
        points.push(inverse_whole_plane(d, start, t)?);
        times.push(t);
        i += stride;
    }
    Ok(Trace { points, times, parameterization: Parameterization::RadialCapacity })
}

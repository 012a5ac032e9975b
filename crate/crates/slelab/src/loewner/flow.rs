//! Adaptive RK4 for Loewner-type ODEs ∂g = F(g, W(t)) that are singular at g = W.

use crate::error::{Error, Result};
use crate::C64;

/// Absorption tolerance for |g - W|.
pub(crate) const SWALLOW_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum FlowEnd {
    At(C64),
    Swallowed(f64),
}

/// Integrates from `t_start` to `t_end` (either direction). `drive(t)` is
/// the singular point, `field(g, w)` the vector field, and the grid with
/// origin `grid0` and spacing `dt` sets the nominal step.
pub(crate) fn integrate(
    field: impl Fn(C64, C64) -> C64,
    drive: impl Fn(f64) -> C64,
    g0: C64,
    t_start: f64,
    t_end: f64,
    grid0: f64,
    dt: f64,
    swallow_tol: f64,
) -> Result<FlowEnd> {
    let dir = if t_end >= t_start { 1.0 } else { -1.0 };
    let stiff = 10.0 * dt.sqrt();
    let mut g = g0;
    let mut t = t_start;
    if (g - drive(t)).norm() < swallow_tol {
        return Ok(FlowEnd::Swallowed(t));
    }
    while dir * (t_end - t) > 1e-15 * (1.0 + t.abs()) {
        // Next grid line in the direction of travel.
        let k = (t - grid0) / dt;
        let next = if dir > 0.0 {
            grid0 + (k + 1e-9).floor() * dt + dt
        } else {
            grid0 + (k - 1e-9).ceil() * dt - dt
        };
        let target = if dir * (next - t_end) > 0.0 { t_end } else { next };
        let dist = (g - drive(t)).norm();
        if dist >= stiff {
            g = rk4(&field, &drive, g, t, target - t);
            t = target;
        } else {
            while dir * (target - t) > 1e-15 * (1.0 + t.abs()) {
                let d = (g - drive(t)).norm();
                if d < swallow_tol {
                    return Ok(FlowEnd::Swallowed(t));
                }
                let span = (target - t).abs();
                let mut h = span;
                let limit = 0.02 * d * d;
                let mut halvings = 0;
                while h > limit {
                    h *= 0.5;
                    halvings += 1;
                    if halvings > 80 {
                        return Err(Error::StepInstability { t, msg: format!("step underflow at |g-W|={d:e}") });
                    }
                }
                let g_new = rk4(&field, &drive, g, t, dir * h);
                if !(g_new.re.is_finite() && g_new.im.is_finite()) {
                    return Err(Error::StepInstability { t, msg: "non-finite state".into() });
                }
                g = g_new;
                t += dir * h;
                if h == span {
                    t = target;
                }
            }
        }
        if !(g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::StepInstability { t, msg: "non-finite state".into() });
        }
        if (g - drive(t)).norm() < swallow_tol {
            return Ok(FlowEnd::Swallowed(t));
        }
    }
    Ok(FlowEnd::At(g))
}

#[inline]
fn rk4(field: &impl Fn(C64, C64) -> C64, drive: &impl Fn(f64) -> C64, g: C64, t: f64, h: f64) -> C64 {
    let w0 = drive(t);
    let wm = drive(t + 0.5 * h);
    let w1 = drive(t + h);
    let k1 = field(g, w0);
    let k2 = field(g + 0.5 * h * k1, wm);
    let k3 = field(g + 0.5 * h * k2, wm);
    let k4 = field(g + h * k3, w1);
    g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};
use crate::rng::CounterRng;
use crate::stochastic::bes3_step_from_zero;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sle,
    SleRho,
    WholePlaneRho,
    ReverseSleKappa,
}

impl Scheme {
    pub fn id(self) -> u32 {
        match self {
            Scheme::Sle => 1,
            Scheme::SleRho => 2,
            Scheme::WholePlaneRho => 3,
            Scheme::ReverseSleKappa => 4,
        }
    }

    pub fn from_id(id: u32) -> Option<Scheme> {
        Some(match id {
            1 => Scheme::Sle,
            2 => Scheme::SleRho,
            3 => Scheme::WholePlaneRho,
            4 => Scheme::ReverseSleKappa,
            _ => return None,
        })
    }

    pub fn is_chordal(self) -> bool {
        matches!(self, Scheme::Sle | Scheme::SleRho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// A boundary force point with its weight and signed start offset from W₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcePoint {
    pub rho: f64,
    pub side: Side,
    /// |x - W₀|; zero means the point starts at W₀ on the given side.
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct DrivingOptions {
    /// Whole-plane: radius of the starting disk.
    pub r0: Option<f64>,
    /// Reverse: starting position of the force point.
    pub reverse_force_start: Option<C64>,
}

/// Discretized driving record on the grid `t0 + i*dt`.
///
/// Chordal and reverse schemes store real `w`. The whole-plane scheme
/// stores the arguments of W and O; the unit-modulus values are
/// recovered with [`DrivingFunction::w_unit`] so |W| = |O| = 1 holds to
/// rounding at every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivingFunction {
    pub scheme: Scheme,
    pub kappa: f64,
    pub dt: f64,
    pub t0: f64,
    pub w: Vec<f64>,
    pub o: Option<Vec<f64>>,
    pub force_points: Vec<ForcePoint>,
    /// Force point trajectories, one vector per entry of `force_points`.
    pub v: Vec<Vec<f64>>,
    /// Reverse scheme: trajectory of the (complex) force point.
    pub v_rev: Option<Vec<C64>>,
    pub truncated: Option<Truncation>,
    pub seed: u64,
}

impl DrivingFunction {
    /// A deterministic chordal driving record from given values.
    pub fn from_values(scheme: Scheme, kappa: f64, dt: f64, w: Vec<f64>) -> Self {
        Self {
            scheme,
            kappa,
            dt,
            t0: 0.0,
            w,
            o: None,
            force_points: Vec::new(),
            v: Vec::new(),
            v_rev: None,
            truncated: None,
            seed: 0,
        }
    }

    /// A whole-plane record from argument arrays.
    pub fn whole_plane_from_angles(kappa: f64, t0: f64, dt: f64, w: Vec<f64>, o: Vec<f64>) -> Self {
        let mut d = Self::from_values(Scheme::WholePlaneRho, kappa, dt, w);
        d.t0 = t0;
        d.o = Some(o);
        d
    }

    pub fn steps(&self) -> usize {
        self.w.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.t0 + self.steps() as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Linear interpolation of the stored `w` values.
    pub fn w_at(&self, t: f64) -> f64 {
        crate::stochastic::interp(self.t0, self.dt, &self.w, t)
    }

    pub fn w_unit(&self, i: usize) -> C64 {
        C64::from_polar(1.0, self.w[i])
    }

    pub fn o_unit(&self, i: usize) -> Option<C64> {
        self.o.as_ref().map(|o| C64::from_polar(1.0, o[i]))
    }

    /// Reversed record s -> w(T - s) - w(T) on the same grid.
    pub fn time_reversed(&self, scheme: Scheme) -> Self {
        let last = *self.w.last().unwrap();
        let w: Vec<f64> = self.w.iter().rev().map(|x| x - last).collect();
        let mut d = Self::from_values(scheme, self.kappa, self.dt, w);
        d.seed = self.seed;
        d
    }

    /// Prefix of the record up to step `n`.
    pub fn truncate_to(&self, n: usize) -> Self {
        let mut d = self.clone();
        d.w.truncate(n + 1);
        if let Some(o) = d.o.as_mut() {
            o.truncate(n + 1);
        }
        for v in d.v.iter_mut() {
            v.truncate(n + 1);
        }
        if let Some(v) = d.v_rev.as_mut() {
            v.truncate(n + 1);
        }
        d
    }
}

/// Generates a driving record for the given scheme on [0, T] (or, for the
/// whole-plane scheme, on [log r₀, T]).
pub fn generate_driving(
    scheme: Scheme,
    kappa: f64,
    rho: &[ForcePoint],
    dt: f64,
    horizon: f64,
    seed: u64,
    opts: &DrivingOptions,
) -> Result<DrivingFunction> {
    ensure(kappa > 0.0 && kappa.is_finite(), || format!("kappa must be positive, got {kappa}"))?;
    ensure(dt > 0.0, || format!("dt must be positive, got {dt}"))?;
    let mut rng = CounterRng::new(seed, 0);
    match scheme {
        Scheme::Sle => {
            ensure(rho.is_empty(), || "scheme sle takes no force points".into())?;
            let n = steps(dt, horizon)?;
            let sk = (kappa * dt).sqrt();
            let mut w = Vec::with_capacity(n + 1);
            let mut x = 0.0;
            w.push(x);
            for _ in 0..n {
                x += sk * rng.normal();
                w.push(x);
            }
            let mut d = DrivingFunction::from_values(scheme, kappa, dt, w);
            d.seed = seed;
            Ok(d)
        }
        Scheme::SleRho => sle_rho(kappa, rho, dt, horizon, seed, &mut rng),
        Scheme::WholePlaneRho => {
            ensure(rho.len() == 1, || "whole_plane_rho needs exactly one weight".into())?;
            whole_plane(kappa, rho[0].rho, dt, horizon, opts.r0.unwrap_or(1e-4), seed, &mut rng)
        }
        Scheme::ReverseSleKappa => {
            let n = steps(dt, horizon)?;
            reverse_pair(kappa, dt, n, opts.reverse_force_start.unwrap_or(C64::new(0.0, 1.0)), seed, &mut rng)
        }
    }
}

fn steps(dt: f64, horizon: f64) -> Result<usize> {
    ensure(horizon > 0.0 && dt <= horizon, || format!("need 0 < dt <= T, got dt={dt}, T={horizon}"))?;
    Ok(((horizon / dt).round() as usize).max(1))
}

fn sle_rho(kappa: f64, fps: &[ForcePoint], dt: f64, horizon: f64, seed: u64, rng: &mut CounterRng) -> Result<DrivingFunction> {
    ensure(!fps.is_empty(), || "sle_rho needs at least one force point".into())?;
    let n = steps(dt, horizon)?;
    // Order force points outward from W on each side.
    let mut order: Vec<usize> = (0..fps.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (fps[a], fps[b]);
        (pa.side as u8).cmp(&(pb.side as u8)).then(pa.offset.total_cmp(&pb.offset))
    });
    for side in [Side::Left, Side::Right] {
        let mut cum = 0.0;
        for &i in order.iter().filter(|&&i| fps[i].side == side) {
            ensure(fps[i].offset >= 0.0, || "force point offsets must be nonnegative".into())?;
            cum += fps[i].rho;
            ensure(cum > -2.0, || format!("cumulative weight {cum} on {side:?} is already at the continuation threshold"))?;
        }
    }
    let sgn = |s: Side| if s == Side::Left { -1.0 } else { 1.0 };
    let mut pos: Vec<f64> = fps.iter().map(|f| sgn(f.side) * f.offset).collect();
    let mut v: Vec<Vec<f64>> = pos.iter().map(|&p| vec![p]).collect();
    let mut w = vec![0.0];
    let mut x = 0.0;
    let sk = (kappa * dt).sqrt();
    let mut truncated = None;
    let tiny = 1e-12;
    for step in 0..n {
        let coincident: Vec<usize> = (0..fps.len()).filter(|&i| (pos[i] - x).abs() < tiny).collect();
        let db = rng.normal();
        let mut new_x;
        let mut new_pos = pos.clone();
        if !coincident.is_empty() && coincident.len() == fps.len() && fps.len() == 1 {
            // Start from coincidence: V - W is sqrt(kappa) times a Bessel
            // process of dimension 1 + 2(rho+2)/kappa; sample its first step.
            let f = fps[0];
            let dim = 1.0 + 2.0 * (f.rho + 2.0) / kappa;
            let gap = kappa.sqrt() * bessel_first_step(dim, dt, rng);
            let s = sgn(f.side);
            new_pos[0] = pos[0] + s * 4.0 * dt / gap.max(tiny);
            new_x = new_pos[0] - s * gap;
        } else {
            let mut drift = 0.0;
            for i in 0..fps.len() {
                let d = x - pos[i];
                if d.abs() > tiny {
                    drift += fps[i].rho / d;
                }
            }
            new_x = x + drift * dt + sk * db;
            for i in 0..fps.len() {
                let d = pos[i] - x;
                if d.abs() > tiny {
                    new_pos[i] = pos[i] + 2.0 / d * dt;
                } else {
                    new_pos[i] = pos[i] + sgn(fps[i].side) * 2.0 * dt.sqrt();
                }
            }
        }
        // Enforce ordering; crossing W means the point is swallowed at W.
        let mut hit_threshold = None;
        for side in [Side::Left, Side::Right] {
            let s = sgn(side);
            let idx: Vec<usize> = order.iter().copied().filter(|&i| fps[i].side == side).collect();
            let mut cum = 0.0;
            let mut prev = new_x;
            for &i in &idx {
                if s * (new_pos[i] - prev) < 0.0 {
                    new_pos[i] = prev;
                }
                prev = new_pos[i];
            }
            for &i in &idx {
                if (new_pos[i] - new_x).abs() <= tiny || s * (new_pos[i] - new_x) <= 0.0 {
                    cum += fps[i].rho;
                    if cum <= -2.0 {
                        hit_threshold = Some(cum);
                    }
                } else {
                    break;
                }
            }
        }
        if let Some(cum) = hit_threshold {
            truncated = Some(Truncation {
                step,
                time: step as f64 * dt,
                reason: format!("continuation threshold: swallowed weight {cum}"),
            });
            break;
        }
        // Reflect force points that landed on W back to their side.
        for i in 0..fps.len() {
            if (new_pos[i] - new_x) * sgn(fps[i].side) < 0.0 {
                new_pos[i] = new_x;
            }
        }
        x = new_x;
        pos = new_pos;
        w.push(x);
        for i in 0..fps.len() {
            v[i].push(pos[i]);
        }
        let _ = &mut new_x;
    }
    let mut d = DrivingFunction::from_values(Scheme::SleRho, kappa, dt, w);
    d.force_points = fps.to_vec();
    d.v = v;
    d.truncated = truncated;
    d.seed = seed;
    Ok(d)
}

fn bessel_first_step(dim: f64, dt: f64, rng: &mut CounterRng) -> f64 {
    use rand_distr::{Distribution, Gamma};
    if dim == 3.0 {
        bes3_step_from_zero(dt, rng)
    } else {
        (dt * Gamma::new(0.5 * dim, 2.0).unwrap().sample(rng)).sqrt()
    }
}

/// Samples ϑ from the density proportional to sin^p(y/2) on (0, 2π).
pub(crate) fn sample_stationary_theta(p: f64, rng: &mut CounterRng) -> f64 {
    loop {
        let y = 2.0 * PI * rng.uniform_open();
        if rng.uniform() < (0.5 * y).sin().powf(p) {
            return y;
        }
    }
}

fn whole_plane(kappa: f64, rho: f64, dt: f64, horizon: f64, r0: f64, seed: u64, rng: &mut CounterRng) -> Result<DrivingFunction> {
    ensure(rho > -2.0, || format!("whole-plane weight must exceed -2, got {rho}"))?;
    ensure(r0 > 0.0 && r0 < 1.0, || format!("r0 must lie in (0,1), got {r0}"))?;
    let t0 = r0.ln();
    ensure(horizon > t0, || format!("horizon {horizon} must exceed log r0 = {t0}"))?;
    let n = (((horizon - t0) / dt).round() as usize).max(1);
    // ϑ = arg W - arg O solves dϑ = sqrt(κ) dB + (ρ/2 + 1) cot(ϑ/2) dt with
    // stationary density proportional to sin^{(2ρ+4)/κ}(ϑ/2).
    let c = 0.5 * rho + 1.0;
    let p = 4.0 * c / kappa;
    let mut wa = 2.0 * PI * rng.uniform();
    let mut th = sample_stationary_theta(p, rng);
    let mut w = Vec::with_capacity(n + 1);
    let mut o = Vec::with_capacity(n + 1);
    w.push(wa);
    o.push(wa - th);
    let sk = (kappa * dt).sqrt();
    let lo = 1e-9;
    for _ in 0..n {
        let db = sk * rng.normal();
        let cot = 1.0 / (0.5 * th).tan();
        let mut th_new = th + c * cot * dt + db;
        if th_new < lo || th_new > 2.0 * PI - lo {
            if th_new < 0.0 {
                th_new = -th_new;
            }
            if th_new > 2.0 * PI {
                th_new = 4.0 * PI - th_new;
            }
            th_new = th_new.clamp(lo, 2.0 * PI - lo);
        }
        wa += 0.5 * rho * cot * dt + db;
        th = th_new;
        w.push(wa);
        o.push(wa - th);
    }
    let mut d = DrivingFunction::whole_plane_from_angles(kappa, t0, dt, w, o);
    d.force_points = vec![ForcePoint { rho, side: Side::Right, offset: 0.0 }];
    d.seed = seed;
    Ok(d)
}

fn reverse_pair(kappa: f64, dt: f64, n: usize, v0: C64, seed: u64, rng: &mut CounterRng) -> Result<DrivingFunction> {
    if v0.im == 0.0 && v0.re == 0.0 {
        return Err(invalid("reverse force point may not start at W0 = 0"));
    }
    let sk = (kappa * dt).sqrt();
    let mut w = vec![0.0];
    let mut v = vec![v0];
    let (mut x, mut q) = (0.0f64, v0);
    for _ in 0..n {
        let dq = q - x;
        let inv = 1.0 / dq;
        let xn = x + sk * rng.normal() - (kappa * inv).re * dt;
        q += -2.0 * inv * dt;
        if q.im < 0.0 {
            q.im = 0.0;
        }
        x = xn;
        w.push(x);
        v.push(q);
    }
    let mut d = DrivingFunction::from_values(Scheme::ReverseSleKappa, kappa, dt, w);
    d.v_rev = Some(v);
    d.seed = seed;
    Ok(d)
}

//! LQG area and boundary measures from circle averages, plus the two
//! scaling experiments built on quantum wedges.

mod intensity;
mod moment;

pub use intensity::{intensity_profile, IntensityOptions, IntensityProfile};
pub use moment::{moment_scaling, MomentOptions};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Error, Result};
use crate::gff::{circle_average, Domain, FieldRealization, CIRCLE_POINTS};
use crate::stats::LinearFit;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub region: String,
    pub epsilon: f64,
    pub gamma: f64,
    pub value: f64,
    pub replicate_count: u64,
    pub stderr: f64,
    /// Cells whose critical integrand was negative and clamped to zero.
    pub clamped_fraction: f64,
}

/// Half-open regions, so that adjacent regions share no lattice cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { center: C64, radius: f64 },
}

impl Region {
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => z.re >= x0 && z.re < x1 && z.im >= y0 && z.im < y1,
            Region::Disk { center, radius } => (z - center).norm() < radius,
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => (x0, x1, y0, y1),
            Region::Disk { center, radius } => {
                (center.re - radius, center.re + radius, center.im - radius, center.im + radius)
            }
        }
    }

    pub fn descriptor(&self) -> String {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => format!("rect[{x0},{x1})x[{y0},{y1})"),
            Region::Disk { center, radius } => format!("disk({},{};{radius})", center.re, center.im),
        }
    }
}

/// Anything that can report circle and boundary semicircle averages.
pub trait Averaged {
    fn circle(&self, center: C64, r: f64) -> Result<f64>;
    /// Average over the half of `|z - x| = r` that lies inside the domain.
    fn semicircle(&self, x: C64, r: f64) -> Result<f64>;
}

impl Averaged for FieldRealization {
    fn circle(&self, center: C64, r: f64) -> Result<f64> {
        circle_average(self, center, r, CIRCLE_POINTS)
    }

    fn semicircle(&self, x: C64, r: f64) -> Result<f64> {
        let upper = match self.domain {
            Domain::Strip if x.im.abs() < 1e-12 => true,
            Domain::Strip if (x.im - PI).abs() < 1e-12 => false,
            Domain::HalfPlaneAnnulus if x.im.abs() < 1e-12 => true,
            _ => return Err(Error::OutOfDomain(format!("{x} is not on a boundary line"))),
        };
        let m = CIRCLE_POINTS;
        let mut s = 0.0;
        for j in 0..m {
            let th = PI * (j as f64 + 0.5) / m as f64;
            let th = if upper { th } else { -th };
            s += self.value(x + C64::from_polar(r, th))?;
        }
        Ok(s / m as f64)
    }
}

/// The field `h(s z) + shift`, the pullback of `h` under `z -> s z` plus a
/// constant.
pub struct Pullback<'a, F: Averaged> {
    pub field: &'a F,
    pub scale: f64,
    pub shift: f64,
}

impl<F: Averaged> Averaged for Pullback<'_, F> {
    fn circle(&self, center: C64, r: f64) -> Result<f64> {
        Ok(self.field.circle(center * self.scale, r * self.scale)? + self.shift)
    }

    fn semicircle(&self, x: C64, r: f64) -> Result<f64> {
        Ok(self.field.semicircle(x * self.scale, r * self.scale)? + self.shift)
    }
}

/// Lattice spacing for Riemann sums at regularisation `epsilon`.
fn lattice(epsilon: f64) -> f64 {
    epsilon / 2.0
}

fn check(epsilon: f64, gamma: f64) -> Result<()> {
    ensure(epsilon > 0.0 && epsilon.is_finite(), || format!("epsilon must be positive, got {epsilon}"))?;
    ensure(gamma > 0.0 && gamma <= 2.0, || format!("gamma must lie in (0, 2], got {gamma}"))
}

/// `sum eps^{gamma^2/2} e^{gamma h_eps(z)} |cell|` over lattice cells of side
/// `eps/2` whose centres lie in `region`.
pub fn lqg_area<F: Averaged>(field: &F, region: Region, epsilon: f64, gamma: f64) -> Result<MeasureEstimate> {
    check(epsilon, gamma)?;
    let h = lattice(epsilon);
    let (x0, x1, y0, y1) = region.bounds();
    let norm = epsilon.powf(gamma * gamma / 2.0) * h * h;
    let mut total = 0.0;
    for i in (x0 / h).floor() as i64..=(x1 / h).ceil() as i64 {
        for j in (y0 / h).floor() as i64..=(y1 / h).ceil() as i64 {
            let z = C64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if region.contains(z) {
                total += (gamma * field.circle(z, epsilon)?).exp();
            }
        }
    }
    Ok(MeasureEstimate {
        region: region.descriptor(),
        epsilon,
        gamma,
        value: total * norm,
        replicate_count: 1,
        stderr: 0.0,
        clamped_fraction: 0.0,
    })
}

/// Boundary segment `[a, b) + i y` on a horizontal boundary line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryInterval {
    pub a: f64,
    pub b: f64,
    pub y: f64,
}

/// Subcritical: `sum eps^{gamma^2/4} e^{gamma h_eps/2} dx`. Critical
/// (`gamma = 2`): `sum eps (log(1/eps) - h_eps/2) e^{h_eps} dx` with negative
/// cells clamped to zero and counted.
pub fn lqg_boundary<F: Averaged>(
    field: &F,
    interval: BoundaryInterval,
    epsilon: f64,
    gamma: f64,
    critical: bool,
) -> Result<MeasureEstimate> {
    check(epsilon, gamma)?;
    if critical && gamma != 2.0 {
        return Err(invalid(format!("critical boundary measure needs gamma = 2, got {gamma}")));
    }
    ensure(interval.a < interval.b, || "empty boundary interval".into())?;
    let h = lattice(epsilon);
    let mut total = 0.0;
    let (mut cells, mut clamped) = (0u64, 0u64);
    for i in (interval.a / h).floor() as i64..=(interval.b / h).ceil() as i64 {
        let x = (i as f64 + 0.5) * h;
        if x < interval.a || x >= interval.b {
            continue;
        }
        cells += 1;
        let he = field.semicircle(C64::new(x, interval.y), epsilon)?;
        if critical {
            let v = epsilon * ((1.0 / epsilon).ln() - he / 2.0) * he.exp();
            if v < 0.0 {
                clamped += 1;
            } else {
                total += v;
            }
        } else {
            total += epsilon.powf(gamma * gamma / 4.0) * (gamma * he / 2.0).exp();
        }
    }
    Ok(MeasureEstimate {
        region: format!("boundary[{},{})+i{}", interval.a, interval.b, interval.y),
        epsilon,
        gamma,
        value: total * h,
        replicate_count: 1,
        stderr: 0.0,
        clamped_fraction: if cells > 0 { clamped as f64 / cells as f64 } else { 0.0 },
    })
}

/// One scale of a scaling experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub law: String,
    pub params: std::collections::BTreeMap<String, f64>,
    pub points: Vec<ScalePoint>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub fit: Option<LinearFit>,
    /// Replicates dropped (zero mass with negative moment).
    pub rejected: u64,
}

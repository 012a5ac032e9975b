//! Gaussian free fields stored as a radial process plus lateral modes.
//!
//! Strip fields live on `R x (0, pi)` with Neumann walls, cylinder fields on
//! `R x [0, 2pi)`. In both cases the field at `x + iy` is
//! `X(x) + sum_k c_k(x) cos(ky) [+ s_k(x) sin(ky)]` where `X` is the average
//! on the vertical line through `x`. Rectangle fields carry a fixed table of
//! Dirichlet eigen-coefficients instead.

mod sample;
mod surface;

pub use sample::{
    sample_cylinder_field, sample_disk_harmonic, sample_free_boundary_gff_strip, sample_zero_boundary_gff,
    rectangle_coefficients, DiskHarmonic, Rect,
};
pub use surface::{alpha_to_weight, build_surface_field, build_surface_field_with, n_modes_default, weight_to_alpha, Surface, Thickness, WedgeSpec};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::stochastic::SamplePath;
use crate::C64;

/// Quadrature points on circles.
pub const CIRCLE_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Rectangle,
    Strip,
    Cylinder,
    /// A strip field read in half-plane coordinates through `z -> log z`.
    HalfPlaneAnnulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    None,
    CircleAverage,
    FirstExit,
}

/// Horizontal extent and spacing. The vertical extent is fixed by the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        let g = Grid { x_min, x_max, dx };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max, || {
            format!("grid extent [{}, {}] is empty", self.x_min, self.x_max)
        })?;
        ensure(self.dx > 0.0 && self.dx <= self.x_max - self.x_min, || {
            format!("grid spacing {} invalid for extent", self.dx)
        })
    }

    /// Number of intervals; the last node may overshoot `x_max` by < dx.
    pub fn cells(&self) -> usize {
        ((self.x_max - self.x_min) / self.dx - 1e-9).ceil().max(1.0) as usize
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells()).map(|i| self.x_min + i as f64 * self.dx).collect()
    }

    pub fn right(&self) -> f64 {
        self.x_min + self.cells() as f64 * self.dx
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let u = ((x - self.x_min) / self.dx).max(0.0);
        let i = (u.floor() as usize).min(self.cells() - 1);
        (i, (u - i as f64).min(1.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRealization {
    pub domain: Domain,
    pub grid: Grid,
    /// Rectangle height (`pi` for strips, `2 pi` for cylinders).
    pub height: f64,
    /// Vertical-line averages `X_x` on the grid nodes. Absent for rectangles.
    pub radial: Option<SamplePath>,
    /// Strip and cylinder: `lateral_modes[k-1][i]` is the cosine coefficient of
    /// mode `k` at node `i`. Rectangle: `lateral_modes[m-1][n-1]` is the
    /// coefficient of the `(m, n)` sine eigenfunction, already scaled.
    pub lateral_modes: Vec<Vec<f64>>,
    /// Sine coefficients (cylinder only).
    pub lateral_sin: Vec<Vec<f64>>,
    pub gamma: Option<f64>,
    /// Log singularity strength of a wedge or cone.
    pub alpha: Option<f64>,
    pub embedding: Embedding,
    pub normalization: String,
    /// Additive constant applied on top of the stored decomposition.
    pub shift: f64,
    pub seed: u64,
}

/// Where to average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Locus {
    /// Whole vertical segment `{x} x (0, height)`.
    Vertical { x: f64 },
    Circle { center: C64, radius: f64 },
}

impl FieldRealization {
    pub fn q(&self) -> Option<f64> {
        self.gamma.map(|g| 2.0 / g + g / 2.0)
    }

    pub fn n_modes(&self) -> usize {
        self.lateral_modes.len()
    }

    /// Copy with `c` added everywhere.
    pub fn shifted(&self, c: f64) -> Self {
        let mut f = self.clone();
        f.shift += c;
        f
    }

    /// Read a strip field in half-plane coordinates. When `gamma` is set the
    /// LQG coordinate change `h_S(log z) - Q log|z|` is applied.
    pub fn as_half_plane(&self) -> Result<Self> {
        ensure(self.domain == Domain::Strip, || "only strip fields map to the half-plane".into())?;
        let mut f = self.clone();
        f.domain = Domain::HalfPlaneAnnulus;
        Ok(f)
    }

    /// Vertical-line average at `x` from the radial process.
    pub fn radial_at(&self, x: f64) -> f64 {
        match &self.radial {
            Some(p) => self.shift + p.interpolate(x),
            None => self.shift,
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        match self.domain {
            Domain::Rectangle => z.re >= 0.0 && z.re <= self.grid.x_max && z.im >= 0.0 && z.im <= self.height,
            Domain::Strip => self.in_x(z.re) && z.im >= 0.0 && z.im <= PI,
            Domain::Cylinder => self.in_x(z.re),
            Domain::HalfPlaneAnnulus => z.im >= 0.0 && z.norm() > 0.0 && self.in_x(z.norm().ln()),
        }
    }

    fn in_x(&self, x: f64) -> bool {
        x >= self.grid.x_min - 1e-12 && x <= self.grid.right() + 1e-12
    }

    /// Point value by mode summation and radial interpolation.
    pub fn value(&self, z: C64) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::OutOfDomain(format!("point {z} outside the field grid")));
        }
        Ok(self.value_unchecked(z))
    }

    pub(crate) fn value_unchecked(&self, z: C64) -> f64 {
        match self.domain {
            Domain::Rectangle => self.shift + self.rectangle_value(z),
            Domain::Strip | Domain::Cylinder => self.radial_at(z.re) + self.lateral_value(z),
            Domain::HalfPlaneAnnulus => {
                let w = z.ln();
                let corr = self.q().map_or(0.0, |q| q * w.re);
                self.radial_at(w.re) + self.lateral_value(w) - corr
            }
        }
    }

    /// Lateral part alone at a strip or cylinder point.
    pub fn lateral_value(&self, z: C64) -> f64 {
        let n = self.lateral_modes.len();
        if n == 0 {
            return 0.0;
        }
        let (i, f) = self.grid.locate(z.re);
        let (c1, s1) = (z.im.cos(), z.im.sin());
        // cos(ky), sin(ky) by the angle-addition recurrence
        let (mut ck, mut sk) = (c1, s1);
        let mut acc = 0.0;
        for k in 0..n {
            let m = &self.lateral_modes[k];
            acc += (m[i] * (1.0 - f) + m[i + 1] * f) * ck;
            if let Some(s) = self.lateral_sin.get(k) {
                acc += (s[i] * (1.0 - f) + s[i + 1] * f) * sk;
            }
            let c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = c;
        }
        acc
    }

    fn rectangle_value(&self, z: C64) -> f64 {
        let (a, b) = (self.grid.x_max, self.height);
        let n = self.lateral_modes.len();
        let sx: Vec<f64> = (1..=n).map(|m| (m as f64 * PI * z.re / a).sin()).collect();
        let sy: Vec<f64> = (1..=n).map(|m| (m as f64 * PI * z.im / b).sin()).collect();
        let mut acc = 0.0;
        for (m, row) in self.lateral_modes.iter().enumerate() {
            let inner: f64 = row.iter().zip(&sy).map(|(c, s)| c * s).sum();
            acc += sx[m] * inner;
        }
        acc
    }

    /// Values on an `nx x ny` node lattice covering the grid, row-major in y.
    pub fn materialize(&self, nx: usize, ny: usize) -> Vec<(f64, f64, f64)> {
        let nx = nx.max(2);
        let ny = ny.max(2);
        let (x0, x1) = match self.domain {
            Domain::Rectangle => (0.0, self.grid.x_max),
            _ => (self.grid.x_min, self.grid.right()),
        };
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = self.height * j as f64 / (ny - 1) as f64;
            for i in 0..nx {
                let x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
                out.push((x, y, self.value_unchecked(C64::new(x, y))));
            }
        }
        out
    }
}

/// Quadrature average of the field on a vertical segment or a circle.
pub fn vertical_or_circle_average(field: &FieldRealization, locus: Locus) -> Result<f64> {
    match locus {
        Locus::Vertical { x } => {
            ensure(field.domain != Domain::HalfPlaneAnnulus, || "vertical averages need strip coordinates".into())?;
            if !field.in_x(x) || (field.domain == Domain::Rectangle && (x < 0.0 || x > field.grid.x_max)) {
                return Err(Error::OutOfDomain(format!("vertical line x = {x} outside grid")));
            }
            // midpoint rule, exact for every stored mode
            let m = CIRCLE_POINTS.max(field.n_modes() + 1);
            let h = field.height / m as f64;
            let s: f64 = (0..m).map(|j| field.value_unchecked(C64::new(x, (j as f64 + 0.5) * h))).sum();
            Ok(s / m as f64)
        }
        Locus::Circle { center, radius } => circle_average(field, center, radius, CIRCLE_POINTS),
    }
}

/// Trapezoid average over `m` equally spaced points of a circle.
pub fn circle_average(field: &FieldRealization, center: C64, radius: f64, m: usize) -> Result<f64> {
    ensure(radius > 0.0 && m >= 3, || format!("bad circle radius {radius} or point count {m}"))?;
    let inside = match field.domain {
        Domain::Strip => center.im - radius > 0.0 && center.im + radius < PI,
        Domain::Rectangle => {
            center.re - radius > 0.0
                && center.re + radius < field.grid.x_max
                && center.im - radius > 0.0
                && center.im + radius < field.height
        }
        Domain::HalfPlaneAnnulus => center.im - radius > 0.0,
        Domain::Cylinder => true,
    };
    let xr = match field.domain {
        Domain::Strip | Domain::Cylinder => field.in_x(center.re - radius) && field.in_x(center.re + radius),
        Domain::HalfPlaneAnnulus => {
            field.in_x((center.norm() - radius).max(1e-300).ln()) && field.in_x((center.norm() + radius).ln())
        }
        Domain::Rectangle => true,
    };
    if !inside || !xr {
        return Err(Error::OutOfDomain(format!("circle at {center} radius {radius} leaves the grid")));
    }
    let step = 2.0 * PI / m as f64;
    let s: f64 = (0..m)
        .map(|j| field.value_unchecked(center + C64::from_polar(radius, j as f64 * step)))
        .sum();
    Ok(s / m as f64)
}

/// Circle average with enough points to resolve the stored modes.
pub fn resolved_circle_average(field: &FieldRealization, center: C64, radius: f64) -> Result<f64> {
    let need = (4.0 * field.n_modes() as f64 * radius).ceil() as usize;
    circle_average(field, center, radius, CIRCLE_POINTS.max(need))
}

/// Neumann Green's function of the half-plane, `-log|z-w| - log|z-conj(w)|`.
pub fn green_neumann_half_plane(z: C64, w: C64) -> f64 {
    -(z - w).norm().ln() - (z - w.conj()).norm().ln()
}

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Domain, Embedding, FieldRealization, Grid};
use crate::error::{ensure, Result};
use crate::rng::CounterRng;
use crate::stochastic::{ProcessKind, SamplePath};
use crate::C64;

/// Axis-aligned rectangle `[0, width] x [0, height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub width: f64,
    pub height: f64,
}

/// Zero-boundary GFF on a rectangle: `sum a_mn sqrt(2 pi / lambda_mn) phi_mn`
/// over `m, n <= n_modes`, with `phi_mn` the L2-normalised sine modes. The
/// `2 pi` makes the covariance the Green's function with `-log` singularity.
pub fn sample_zero_boundary_gff(rect: Rect, n_modes: usize, seed: u64) -> Result<FieldRealization> {
    ensure(n_modes >= 1, || "n_modes must be at least 1".into())?;
    ensure(rect.width > 0.0 && rect.height > 0.0, || "rectangle must have positive sides".into())?;
    let (a, b) = (rect.width, rect.height);
    let mut rng = CounterRng::new(seed, 0);
    let coeffs = (1..=n_modes)
        .map(|m| {
            (1..=n_modes)
                .map(|n| {
                    let lam = PI * PI * ((m * m) as f64 / (a * a) + (n * n) as f64 / (b * b));
                    rng.normal() * (8.0 * PI / (lam * a * b)).sqrt()
                })
                .collect()
        })
        .collect();
    Ok(FieldRealization {
        domain: Domain::Rectangle,
        grid: Grid { x_min: 0.0, x_max: a, dx: a.min(b) / 128.0 },
        height: b,
        radial: None,
        lateral_modes: coeffs,
        lateral_sin: Vec::new(),
        gamma: None,
        alpha: None,
        embedding: Embedding::None,
        normalization: "dirichlet".into(),
        shift: 0.0,
        seed,
    })
}

/// Raw standard normals behind a rectangle field, in `(m, n)` row-major order.
pub fn rectangle_coefficients(field: &FieldRealization) -> Vec<f64> {
    let (a, b) = (field.grid.x_max, field.height);
    let mut out = Vec::new();
    for (m, row) in field.lateral_modes.iter().enumerate() {
        for (n, c) in row.iter().enumerate() {
            let (m, n) = ((m + 1) as f64, (n + 1) as f64);
            let lam = PI * PI * (m * m / (a * a) + n * n / (b * b));
            out.push(c / (8.0 * PI / (lam * a * b)).sqrt());
        }
    }
    out
}

/// Free-boundary GFF on the strip `R x (0, pi)`, normalised to have mean zero
/// on `{0} x (0, pi)`.
///
/// Neumann Green's function in log coordinates expands as
/// `-2 max(x, s) + sum_k (2/k) e^{-k|x-s|} cos(ky) cos(ku)`, so the line
/// averages form a two-sided Brownian motion with `Var X_x = 2|x|` and mode
/// `k` carries a stationary OU coefficient with variance `2/k` and rate `k`.
pub fn sample_free_boundary_gff_strip(grid: &Grid, n_modes: usize, seed: u64) -> Result<FieldRealization> {
    grid.validate()?;
    let root = CounterRng::new(seed, 0);
    let nodes = grid.nodes();
    let mut rng = root.fork(0);
    let radial = two_sided_bm(&nodes, 2.0, &mut rng);
    Ok(FieldRealization {
        domain: Domain::Strip,
        grid: *grid,
        height: PI,
        radial: Some(radial_path(&nodes, grid.dx, radial, 2.0, seed)),
        lateral_modes: lateral(&root, 1, n_modes, grid, 2.0),
        lateral_sin: Vec::new(),
        gamma: None,
        alpha: None,
        embedding: Embedding::None,
        normalization: "mean zero on {0} x (0, pi)".into(),
        shift: 0.0,
        seed,
    })
}

/// Whole-plane GFF in cylinder coordinates `z = e^{x + iy}`, mean zero on
/// the unit circle: `Var X_x = |x|` and both Fourier coefficients of mode `k`
/// have variance `1/k`.
pub fn sample_cylinder_field(grid: &Grid, n_modes: usize, seed: u64) -> Result<FieldRealization> {
    grid.validate()?;
    let root = CounterRng::new(seed, 0);
    let nodes = grid.nodes();
    let mut rng = root.fork(0);
    let radial = two_sided_bm(&nodes, 1.0, &mut rng);
    Ok(FieldRealization {
        domain: Domain::Cylinder,
        grid: *grid,
        height: 2.0 * PI,
        radial: Some(radial_path(&nodes, grid.dx, radial, 1.0, seed)),
        lateral_modes: lateral(&root, 1, n_modes, grid, 1.0),
        lateral_sin: lateral(&root, 2, n_modes, grid, 1.0),
        gamma: None,
        alpha: None,
        embedding: Embedding::None,
        normalization: "mean zero on the unit circle".into(),
        shift: 0.0,
        seed,
    })
}

pub(crate) fn radial_path(nodes: &[f64], dx: f64, values: Vec<f64>, rate: f64, seed: u64) -> SamplePath {
    let mut params = BTreeMap::new();
    params.insert("variance_rate".into(), rate);
    SamplePath {
        times: nodes.to_vec(),
        values,
        values_im: None,
        kind: ProcessKind::Brownian,
        params,
        dt: dx,
        seed,
        boundary_hits: Vec::new(),
    }
}

/// Brownian motion pinned to 0 at x = 0 and run outward in both directions.
pub(crate) fn two_sided_bm(nodes: &[f64], rate: f64, rng: &mut CounterRng) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    let split = nodes.partition_point(|&x| x < 0.0);
    let (mut prev, mut val) = (0.0, 0.0);
    for i in split..nodes.len() {
        val += (rate * (nodes[i] - prev)).sqrt() * rng.normal();
        prev = nodes[i];
        out[i] = val;
    }
    let (mut prev, mut val) = (0.0, 0.0);
    for i in (0..split).rev() {
        val += (rate * (prev - nodes[i])).sqrt() * rng.normal();
        prev = nodes[i];
        out[i] = val;
    }
    out
}

/// Stationary OU coefficient paths for modes `1..=n` with variance `scale/k`.
pub(crate) fn lateral(root: &CounterRng, family: u64, n: usize, grid: &Grid, scale: f64) -> Vec<Vec<f64>> {
    let len = grid.cells() + 1;
    (1..=n)
        .map(|k| {
            let mut rng = root.fork(family << 32 | k as u64);
            ou_path(k as f64, scale / k as f64, grid.dx, len, &mut rng)
        })
        .collect()
}

/// Exact OU samples with covariance `var * e^{-rate |x - s|}` on a uniform grid.
pub(crate) fn ou_path(rate: f64, var: f64, dx: f64, len: usize, rng: &mut CounterRng) -> Vec<f64> {
    let rho = (-rate * dx).exp();
    let innov = (var * (1.0 - rho * rho)).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut c = var.sqrt() * rng.normal();
    out.push(c);
    for _ in 1..len {
        c = rho * c + innov * rng.normal();
        out.push(c);
    }
    out
}

/// Harmonic extension to the disk of whole-plane GFF boundary data on the
/// unit circle: `sum_k sqrt(2/k) r^k (a_k cos k theta + b_k sin k theta)`,
/// whose variance is `-2 log(1 - r^2)` in the untruncated limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskHarmonic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl DiskHarmonic {
    pub fn value(&self, z: C64) -> f64 {
        let (r, th) = z.to_polar();
        let mut acc = 0.0;
        let mut rk = 1.0;
        for (k, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            let k = (k + 1) as f64;
            rk *= r;
            acc += (2.0 / k).sqrt() * rk * (a * (k * th).cos() + b * (k * th).sin());
        }
        acc
    }
}

pub fn sample_disk_harmonic(n_modes: usize, seed: u64) -> DiskHarmonic {
    let mut rng = CounterRng::new(seed, 0);
    let a = (0..n_modes).map(|_| rng.normal()).collect();
    let b = (0..n_modes).map(|_| rng.normal()).collect();
    DiskHarmonic { a, b }
}

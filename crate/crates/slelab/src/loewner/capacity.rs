use super::chordal::slit_forward;
use super::Trace;
use crate::C64;

/// Largest imaginary part in a point set.
pub fn sup_im(points: &[C64]) -> f64 {
    points.iter().map(|p| p.im).fold(0.0, f64::max)
}

/// Half-plane capacity of the hull generated by an ordered curve sample
/// starting on the real line.
///
/// The points are unzipped with vertical slit maps; the composed
/// uniformizing map g is then evaluated at i·20s, i·40s, i·80s (s the hull
/// scale, at least 1) and c in g(z) = z + c/z + ... is extracted by
/// Richardson extrapolation of z(g(z) - z).
pub fn hull_capacity(points: &[C64]) -> f64 {
    let mut slits: Vec<(f64, f64)> = Vec::new();
    let mut scale: f64 = 1.0;
    for &p in points {
        scale = scale.max(p.norm());
        if p.im <= 0.0 {
            continue;
        }
        let mut q = p;
        for &(b, h2) in &slits {
            q = slit_forward(q, b, h2);
        }
        if q.im > 0.0 {
            slits.push((q.re, q.im * q.im));
        }
    }
    if slits.is_empty() {
        return 0.0;
    }
    let g = |z: C64| {
        let mut q = z;
        for &(b, h2) in &slits {
            q = slit_forward(q, b, h2);
        }
        q
    };
    let f = |r: f64| {
        let z = C64::new(0.0, r);
        (z * (g(z) - z)).re
    };
    let r = 20.0 * scale;
    let (f1, f2, f3) = (f(r), f(2.0 * r), f(4.0 * r));
    let r1 = 2.0 * f2 - f1;
    let r2 = 2.0 * f3 - f2;
    (4.0 * r2 - r1) / 3.0
}

pub fn hull_capacity_of_trace(trace: &Trace) -> f64 {
    hull_capacity(&trace.points)
}

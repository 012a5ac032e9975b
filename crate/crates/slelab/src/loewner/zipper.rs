//! Composition of vertical-slit maps with a dyadic cache of Laurent
//! expansions, so that all N tips of a trace cost O(N log N) map
//! evaluations instead of O(N²).
//!
//! Map k (0-based) is the inverse slit map with base `w[k+1]` and height
//! 2√dt. A dyadic block of consecutive maps composes to a hydrodynamically
//! normalized map F(w) = w + Σ a_j (w - c)^{-j}, analytic off a real
//! interval [c - R, c + R]. Far from that interval the truncated series
//! replaces the block.

use std::f64::consts::PI;

use crate::C64;

use super::chordal::{slit_forward_real, slit_inverse};

const TERMS: usize = 24;
const SAMPLES: usize = 64;
const MIN_SERIES_LEVEL: usize = 3;
/// Series are used only where |w - c| exceeds this multiple of R.
const FAR: f64 = 3.0;

struct Level {
    lo: Vec<f64>,
    hi: Vec<f64>,
    coeffs: Vec<[C64; TERMS]>,
}

pub struct SlitComposer {
    bases: Vec<f64>,
    dts: Vec<f64>,
    levels: Vec<Level>,
}

impl SlitComposer {
    /// `bases[k]` is the slit base of map k.
    pub fn new(bases: Vec<f64>, dt: f64) -> Self {
        let n = bases.len();
        Self::with_steps(bases, vec![dt; n])
    }

    /// Map k has its own time step `dts[k]` (slit height 2√dts[k]).
    pub fn with_steps(bases: Vec<f64>, dts: Vec<f64>) -> Self {
        assert_eq!(bases.len(), dts.len(), "one time step per map");
        let n = bases.len();
        let mut levels = vec![Level {
            lo: bases.iter().zip(&dts).map(|(b, d)| b - 2.0 * d.sqrt()).collect(),
            hi: bases.iter().zip(&dts).map(|(b, d)| b + 2.0 * d.sqrt()).collect(),
            coeffs: Vec::new(),
        }];
        let mut comp = SlitComposer { bases, dts, levels: Vec::new() };
        let mut size = 2;
        let mut lvl = 1;
        while size <= n {
            let prev = &levels[lvl - 1];
            let count = n / size;
            let mut lo = Vec::with_capacity(count);
            let mut hi = Vec::with_capacity(count);
            for j in 0..count {
                let (l, r_) = (2 * j, 2 * j + 1);
                let start_r = r_ * (size / 2);
                let end_r = start_r + size / 2;
                let mut a = prev.lo[l];
                let mut b = prev.hi[l];
                for k in start_r..end_r {
                    a = slit_forward_real(a, comp.bases[k], comp.dts[k], -1.0);
                    b = slit_forward_real(b, comp.bases[k], comp.dts[k], 1.0);
                }
                lo.push(a.min(prev.lo[r_]));
                hi.push(b.max(prev.hi[r_]));
            }
            levels.push(Level { lo, hi, coeffs: Vec::new() });
            size *= 2;
            lvl += 1;
        }
        comp.levels = levels;
        for lvl in MIN_SERIES_LEVEL..comp.levels.len() {
            let count = comp.levels[lvl].lo.len();
            let mut coeffs = Vec::with_capacity(count);
            for j in 0..count {
                coeffs.push(comp.expand(lvl, j));
            }
            comp.levels[lvl].coeffs = coeffs;
        }
        comp
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    fn center_radius(&self, lvl: usize, j: usize) -> (f64, f64) {
        let l = &self.levels[lvl];
        (0.5 * (l.lo[j] + l.hi[j]), 0.5 * (l.hi[j] - l.lo[j]))
    }

    fn expand(&self, lvl: usize, j: usize) -> [C64; TERMS] {
        let (c, r) = self.center_radius(lvl, j);
        let rho = 1.5 * r;
        let mut a = [C64::new(0.0, 0.0); TERMS];
        for m in 0..SAMPLES {
            let e = C64::from_polar(1.0, 2.0 * PI * (m as f64 + 0.5) / SAMPLES as f64);
            let w = c + rho * e;
            let d = self.eval_children(lvl, j, w) - w;
            let mut pw = rho * e;
            for coef in a.iter_mut() {
                *coef += d * pw;
                pw *= rho * e;
            }
        }
        for coef in a.iter_mut() {
            *coef /= SAMPLES as f64;
        }
        a
    }

    fn eval_children(&self, lvl: usize, j: usize, w: C64) -> C64 {
        let inner = self.eval(lvl - 1, 2 * j + 1, w);
        self.eval(lvl - 1, 2 * j, inner)
    }

    /// Applies the composed block (lvl, j) to w.
    fn eval(&self, lvl: usize, j: usize, w: C64) -> C64 {
        if lvl == 0 {
            return slit_inverse(w, self.bases[j], self.dts[j]);
        }
        if lvl >= MIN_SERIES_LEVEL {
            let (c, r) = self.center_radius(lvl, j);
            let z = w - c;
            if z.norm() > FAR * r {
                let u = 1.0 / z;
                let a = &self.levels[lvl].coeffs[j];
                let mut s = C64::new(0.0, 0.0);
                for coef in a.iter().rev() {
                    s = (s + coef) * u;
                }
                return w + s;
            }
        }
        self.eval_children(lvl, j, w)
    }

    /// Applies maps m-1, m-2, ..., 0 to w, i.e. the inverse of g_{m dt}.
    pub fn apply_prefix(&self, m: usize, w: C64) -> C64 {
        let mut pos = m.min(self.bases.len());
        let mut w = w;
        while pos > 0 {
            let mut lvl = pos.trailing_zeros() as usize;
            lvl = lvl.min(self.levels.len() - 1);
            let size = 1usize << lvl;
            w = self.eval(lvl, pos / size - 1, w);
            pos -= size;
        }
        w
    }

    /// Tip after m maps: the image of the last slit's tip.
    pub fn tip(&self, m: usize) -> C64 {
        if m == 0 {
            return C64::new(self.bases.first().copied().unwrap_or(0.0), 0.0);
        }
        let b = self.bases[m - 1];
        let top = C64::new(b, 2.0 * self.dts[m - 1].sqrt());
        self.apply_prefix(m - 1, top)
    }
}

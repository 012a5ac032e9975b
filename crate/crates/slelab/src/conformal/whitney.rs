//! Whitney squares of a raster domain, quasihyperbolic distances on the
//! Whitney graph and boundary shadows of its geodesics.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::raster::Raster;
use crate::error::{Error, Result};
use crate::C64;

/// Static 2D k-d tree over points, queried for the nearest point to a box.
#[derive(Clone, Debug, Default)]
struct KdTree {
    pts: Vec<C64>,
}

fn coord(p: C64, axis: usize) -> f64 {
    if axis == 0 {
        p.re
    } else {
        p.im
    }
}

impl KdTree {
    fn new(mut pts: Vec<C64>) -> Self {
        let n = pts.len();
        Self::build(&mut pts, 0, n, 0);
        KdTree { pts }
    }

    fn build(pts: &mut [C64], lo: usize, hi: usize, depth: usize) {
        if hi - lo <= 1 {
            return;
        }
        let mid = (lo + hi) / 2;
        let axis = depth % 2;
        pts[lo..hi].select_nth_unstable_by(mid - lo, |a, b| coord(*a, axis).total_cmp(&coord(*b, axis)));
        Self::build(pts, lo, mid, depth + 1);
        Self::build(pts, mid + 1, hi, depth + 1);
    }

    /// Nearest point to the box `[lo, hi]` and its distance (0 inside).
    fn nearest(&self, lo: C64, hi: C64) -> (f64, C64) {
        let mut best = (f64::INFINITY, C64::new(f64::NAN, f64::NAN));
        self.rec(0, self.pts.len(), 0, lo, hi, &mut best);
        (best.0.sqrt(), best.1)
    }

    fn rec(&self, a: usize, b: usize, depth: usize, lo: C64, hi: C64, best: &mut (f64, C64)) {
        if a >= b {
            return;
        }
        let mid = (a + b) / 2;
        let p = self.pts[mid];
        let dx = (lo.re - p.re).max(0.0).max(p.re - hi.re);
        let dy = (lo.im - p.im).max(0.0).max(p.im - hi.im);
        let d2 = dx * dx + dy * dy;
        if d2 < best.0 {
            *best = (d2, p);
        }
        let axis = depth % 2;
        let c = coord(p, axis);
        let (qa, qb) = (coord(lo, axis), coord(hi, axis));
        let (near, far, gap) = if qb < c {
            ((a, mid), (mid + 1, b), c - qb)
        } else if qa > c {
            ((mid + 1, b), (a, mid), qa - c)
        } else {
            ((a, mid), (mid + 1, b), 0.0)
        };
        self.rec(near.0, near.1, depth + 1, lo, hi, best);
        if gap * gap < best.0 {
            self.rec(far.0, far.1, depth + 1, lo, hi, best);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCell {
    pub center: C64,
    /// Side length is `2^-level`.
    pub level: i32,
    /// Distance from the square to the complement.
    pub dist: f64,
    pub shadow_diam: f64,
    /// Some side of the square faces uncovered ground near the boundary.
    pub boundary_adjacent: bool,
    pub component: usize,
}

impl WhitneyCell {
    pub fn side(&self) -> f64 {
        (-self.level as f64).exp2()
    }

    pub fn diam(&self) -> f64 {
        self.side() * std::f64::consts::SQRT_2
    }

    pub fn contains(&self, z: C64) -> bool {
        let h = self.side() / 2.0;
        (z.re - self.center.re).abs() <= h && (z.im - self.center.im).abs() <= h
    }
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    pub cells: Vec<WhitneyCell>,
    pub adjacency: Vec<Vec<usize>>,
    pub max_level: i32,
    pub min_level: i32,
    pub pixel: f64,
    pub raster_dims: (usize, usize),
    pub components: usize,
    /// Points of the domain this far from the boundary are always covered.
    pub coverage_threshold: f64,
    boundary: KdTree,
    lookup: HashMap<(i32, i64, i64), usize>,
    qh_edges: OnceLock<Vec<Vec<(usize, f64)>>>,
}

/// Cells this many hops apart get a direct straight-segment edge.
const SHORTCUT_HOPS: usize = 3;

fn side(level: i32) -> f64 {
    (-level as f64).exp2()
}

/// Prefix sums of free-pixel counts.
struct Counts {
    w: usize,
    h: usize,
    s: Vec<u32>,
}

impl Counts {
    fn new(r: &Raster) -> Self {
        let (w, h) = (r.width, r.height);
        let mut s = vec![0u32; (w + 1) * (h + 1)];
        for j in 0..h {
            for i in 0..w {
                s[(j + 1) * (w + 1) + i + 1] = s[j * (w + 1) + i + 1] + s[(j + 1) * (w + 1) + i] - s[j * (w + 1) + i]
                    + r.inside[j * w + i] as u32;
            }
        }
        Counts { w, h, s }
    }

    /// Free pixels with index in `[i0, i1) x [j0, j1)`.
    fn count(&self, i0: i64, i1: i64, j0: i64, j1: i64) -> u32 {
        let c = |v: i64, n: usize| v.clamp(0, n as i64) as usize;
        let (i0, i1, j0, j1) = (c(i0, self.w), c(i1, self.w), c(j0, self.h), c(j1, self.h));
        if i0 >= i1 || j0 >= j1 {
            return 0;
        }
        let w = self.w + 1;
        self.s[j1 * w + i1] + self.s[j0 * w + i0] - self.s[j0 * w + i1] - self.s[j1 * w + i0]
    }
}

/// Maximal dyadic squares `Q` with `diam Q <= dist(Q, complement)`, down to
/// side `2^-max_level`. Maximality gives `dist < 4 diam` for every square
/// below the top level. The complement is the set of non-free pixels
/// (as squares) together with everything outside the raster frame.
pub fn whitney_decompose(raster: &Raster, max_level: i32) -> Result<WhitneyDecomposition> {
    if raster.count_inside() == 0 {
        return Err(Error::InvalidParameter("raster has no free pixels".into()));
    }
    let p = raster.pixel;
    // complement pixels touching a free pixel, including the virtual frame
    let mut bpts = Vec::new();
    for j in -1..=raster.height as i64 {
        for i in -1..=raster.width as i64 {
            if raster.get(i, j) {
                continue;
            }
            let near = (-1..=1).any(|dj| (-1..=1).any(|di| raster.get(i + di, j + dj)));
            if near {
                bpts.push(raster.origin + C64::new((i as f64 + 0.5) * p, (j as f64 + 0.5) * p));
            }
        }
    }
    let boundary = KdTree::new(bpts);
    let counts = Counts::new(raster);
    let extent = raster.width.max(raster.height) as f64 * p;
    let top = (-extent.log2()).floor() as i32;
    let max_level = max_level.max(top);
    let half = C64::new(p / 2.0, p / 2.0);

    let s0 = side(top);
    let (lo, hi) = (raster.origin, raster.origin + C64::new(raster.width as f64 * p, raster.height as f64 * p));
    let mut stack = Vec::new();
    for i in (lo.re / s0).floor() as i64..=(hi.re / s0).floor() as i64 {
        for j in (lo.im / s0).floor() as i64..=(hi.im / s0).floor() as i64 {
            stack.push((top, i, j));
        }
    }
    let mut cells = Vec::new();
    let mut lookup = HashMap::new();
    while let Some((lv, i, j)) = stack.pop() {
        let s = side(lv);
        let (x0, y0) = (i as f64 * s, j as f64 * s);
        // free pixel centres inside the square
        let pi = |x: f64| ((x - raster.origin.re) / p - 0.5).ceil() as i64;
        let pj = |y: f64| ((y - raster.origin.im) / p - 0.5).ceil() as i64;
        if counts.count(pi(x0), pi(x0 + s), pj(y0), pj(y0 + s)) == 0 {
            continue;
        }
        let (d, _) = boundary.nearest(C64::new(x0, y0) - half, C64::new(x0 + s, y0 + s) + half);
        let diam = s * std::f64::consts::SQRT_2;
        if d >= diam {
            lookup.insert((lv, i, j), cells.len());
            cells.push(WhitneyCell {
                center: C64::new(x0 + s / 2.0, y0 + s / 2.0),
                level: lv,
                dist: d,
                shadow_diam: 0.0,
                boundary_adjacent: false,
                component: 0,
            });
        } else if lv < max_level {
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                stack.push((lv + 1, 2 * i + di, 2 * j + dj));
            }
        }
    }
    // deterministic order: coarse first, then by position
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| key(&cells[a]).partial_cmp(&key(&cells[b])).unwrap());
    let cells: Vec<WhitneyCell> = order.iter().map(|&k| cells[k].clone()).collect();
    let lookup: HashMap<_, _> = cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let s = c.side();
            ((c.level, (c.center.re / s).floor() as i64, (c.center.im / s).floor() as i64), k)
        })
        .collect();
    let min_level = cells.iter().map(|c| c.level).min().unwrap_or(top);

    let mut dec = WhitneyDecomposition {
        cells,
        adjacency: Vec::new(),
        max_level,
        min_level,
        pixel: p,
        raster_dims: (raster.width, raster.height),
        components: 0,
        coverage_threshold: 2.0 * std::f64::consts::SQRT_2 * side(max_level),
        boundary,
        lookup,
        qh_edges: OnceLock::new(),
    };
    dec.link();
    Ok(dec)
}

fn key(c: &WhitneyCell) -> (i32, f64, f64) {
    (c.level, c.center.re, c.center.im)
}

fn cmp_key(a: &WhitneyCell, b: &WhitneyCell) -> Ordering {
    a.level.cmp(&b.level).then(a.center.re.total_cmp(&b.center.re)).then(a.center.im.total_cmp(&b.center.im))
}

impl WhitneyDecomposition {
    /// Index of the cell containing `z`.
    pub fn locate(&self, z: C64) -> Option<usize> {
        (self.min_level..=self.max_level).find_map(|lv| {
            let s = side(lv);
            self.lookup.get(&(lv, (z.re / s).floor() as i64, (z.im / s).floor() as i64)).copied()
        })
    }

    /// Distance from a point to the complement.
    pub fn boundary_distance(&self, z: C64) -> f64 {
        let h = C64::new(self.pixel / 2.0, self.pixel / 2.0);
        self.boundary.nearest(z - h, z + h).0
    }

    /// Closest complement pixel centre to `z`.
    pub fn boundary_point(&self, z: C64) -> C64 {
        self.boundary.nearest(z, z).1
    }

    /// Number of cells at each level, from `min_level`.
    pub fn level_counts(&self) -> Vec<(i32, usize)> {
        let mut m = std::collections::BTreeMap::new();
        for c in &self.cells {
            *m.entry(c.level).or_insert(0) += 1;
        }
        m.into_iter().collect()
    }

    /// Quasihyperbolic length of the straight segment `[a, b]`, or `None`
    /// unless the segment is certified to stay in the domain.
    ///
    /// A piece is certified when the boundary distance at its midpoint
    /// exceeds half its length (the distance is 1-Lipschitz). Pieces are
    /// halved until that distance is twice their length, then integrated by
    /// Simpson's rule, so the work grows only logarithmically near the boundary.
    pub fn segment_qh(&self, a: C64, b: C64) -> Option<f64> {
        let (da, db) = (self.boundary_distance(a), self.boundary_distance(b));
        self.piece_qh(a, b, da, db, 0, false)
    }

    fn piece_qh(&self, a: C64, b: C64, da: f64, db: f64, depth: u32, certified: bool) -> Option<f64> {
        let len = (b - a).norm();
        if len == 0.0 {
            return Some(0.0);
        }
        let m = (a + b) / 2.0;
        let dm = self.boundary_distance(m);
        if dm <= 0.0 {
            return None;
        }
        let certified = certified || dm > len / 2.0;
        if certified && dm > 2.0 * len && da > 0.0 && db > 0.0 {
            return Some(len * (1.0 / da + 4.0 / dm + 1.0 / db) / 6.0);
        }
        if depth >= 60 {
            return None;
        }
        Some(self.piece_qh(a, m, da, dm, depth + 1, certified)? + self.piece_qh(m, b, dm, db, depth + 1, certified)?)
    }

    /// Weighted edges: side neighbours plus certified straight shortcuts to
    /// every cell within a few hops, so graph paths can cut corners.
    pub fn qh_edges(&self) -> &[Vec<(usize, f64)>] {
        self.qh_edges.get_or_init(|| {
            let n = self.cells.len();
            let mut seen = vec![usize::MAX; n];
            (0..n)
                .map(|u| {
                    let cu = self.cells[u].center;
                    let mut out = Vec::new();
                    let mut frontier = vec![u];
                    seen[u] = u;
                    for _ in 0..SHORTCUT_HOPS {
                        let mut next = Vec::new();
                        for &x in &frontier {
                            for &v in &self.adjacency[x] {
                                if seen[v] != u {
                                    seen[v] = u;
                                    next.push(v);
                                    let cv = self.cells[v].center;
                                    let w = self.segment_qh(cu, cv);
                                    if let Some(w) = w {
                                        out.push((v, w));
                                    }
                                }
                            }
                        }
                        frontier = next;
                    }
                    out.sort_by(|a, b| a.0.cmp(&b.0));
                    out
                })
                .collect()
        })
    }

    fn link(&mut self) {
        let n = self.cells.len();
        let eta = side(self.max_level) * 1e-3;
        let mut adj = vec![Vec::new(); n];
        for k in 0..n {
            let c = &self.cells[k];
            let h = c.side() / 2.0;
            let mut open = false;
            for (nx, ny) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                for t in [-0.75, -0.25, 0.25, 0.75] {
                    // point just outside the side, a quarter-side apart
                    let (tx, ty) = (-ny, nx);
                    let z = c.center + C64::new(nx * (h + eta) + tx * t * h, ny * (h + eta) + ty * t * h);
                    match self.locate(z) {
                        Some(m) if m != k => adj[k].push(m),
                        Some(_) => {}
                        None => open = true,
                    }
                }
            }
            self.cells[k].boundary_adjacent = open;
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        // symmetrise
        for k in 0..n {
            for m in adj[k].clone() {
                if !adj[m].contains(&k) {
                    adj[m].push(k);
                }
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        let mut comp = vec![usize::MAX; n];
        let mut nc = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = nc;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = nc;
                        q.push_back(v);
                    }
                }
            }
            nc += 1;
        }
        if nc > 1 {
            log::warn!("free region splits into {nc} components; each is decomposed separately");
        }
        for (c, k) in self.cells.iter_mut().zip(comp) {
            c.component = k;
        }
        self.components = nc;
        self.adjacency = adj;
    }

    /// Shortest paths from cell `src` over [`Self::qh_edges`], or over side
    /// adjacency with unit weights when `unit`. Ties go to the predecessor
    /// that is smaller in `(level, centre)` order.
    pub fn shortest_paths(&self, src: usize, unit: bool) -> (Vec<f64>, Vec<usize>) {
        let mut dist = vec![f64::INFINITY; self.cells.len()];
        dist[src] = 0.0;
        self.dijkstra(dist, unit)
    }

    /// Quasihyperbolic distances from the point `z` to every cell centre:
    /// certified straight segments from `z` seed a weighted Dijkstra. Cells
    /// seeded directly have no predecessor.
    pub fn distances_from(&self, z: C64) -> Result<(Vec<f64>, Vec<usize>)> {
        self.cell_of(z)?;
        let dist = self.cells.iter().map(|c| self.segment_qh(z, c.center).unwrap_or(f64::INFINITY)).collect();
        Ok(self.dijkstra(dist, false))
    }

    fn dijkstra(&self, mut dist: Vec<f64>, unit: bool) -> (Vec<f64>, Vec<usize>) {
        let n = self.cells.len();
        let mut pred = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut heap: BinaryHeap<Entry> =
            dist.iter().enumerate().filter(|(_, d)| d.is_finite()).map(|(k, &d)| Entry(d, k)).collect();
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let edges: Vec<(usize, f64)> = if unit {
                self.adjacency[u].iter().map(|&v| (v, 1.0)).collect()
            } else {
                self.qh_edges()[u].clone()
            };
            for (v, w) in edges {
                if done[v] {
                    continue;
                }
                let nd = d + w;
                let better = nd < dist[v]
                    || (nd == dist[v] && pred[v] != usize::MAX && cmp_key(&self.cells[u], &self.cells[pred[v]]) == Ordering::Less);
                if better {
                    dist[v] = nd;
                    pred[v] = u;
                    heap.push(Entry(nd, v));
                }
            }
        }
        (dist, pred)
    }

    /// Append the cells met by the segment `[a, b]`, in order.
    pub fn cells_on_segment(&self, a: C64, b: C64, out: &mut Vec<usize>) {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            out.extend(self.locate(a));
            return;
        }
        let nudge = side(self.max_level) * 1e-6 / len;
        let creep = self.pixel / (4.0 * len);
        let mut t = 0.0;
        while t <= 1.0 {
            let p = a + d * t;
            match self.locate(p) {
                Some(k) => {
                    if out.last() != Some(&k) {
                        out.push(k);
                    }
                    let c = &self.cells[k];
                    let h = c.side() / 2.0;
                    let exit = |lo: f64, hi: f64, o: f64, v: f64| {
                        if v > 0.0 {
                            (hi - o) / v
                        } else if v < 0.0 {
                            (lo - o) / v
                        } else {
                            f64::INFINITY
                        }
                    };
                    let tx = exit(c.center.re - h, c.center.re + h, a.re, d.re);
                    let ty = exit(c.center.im - h, c.center.im + h, a.im, d.im);
                    t = tx.min(ty).max(t) + nudge;
                }
                None => t += creep,
            }
        }
    }

    fn cell_of(&self, z: C64) -> Result<usize> {
        self.locate(z).ok_or_else(|| Error::OutOfDomain(format!("{z} lies in no Whitney cell")))
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Quasihyperbolic distance estimate: the shorter of a certified straight
/// segment and the graph route of [`WhitneyDecomposition::distances_from`]
/// finished by a straight leg inside the cell of `w`.
pub fn quasihyperbolic_distance(dec: &WhitneyDecomposition, z: C64, w: C64) -> Result<f64> {
    let b = dec.cell_of(w)?;
    let direct = dec.segment_qh(z, w).unwrap_or(f64::INFINITY);
    if dec.cell_of(z)? == b {
        return Ok(direct);
    }
    let (d, _) = dec.distances_from(z)?;
    let leg = dec.segment_qh(dec.cells[b].center, w).unwrap_or(f64::INFINITY);
    Ok(direct.min(d[b] + leg))
}

/// Hop count between the cells containing `z` and `w`.
pub fn graph_distance(dec: &WhitneyDecomposition, z: C64, w: C64) -> Result<f64> {
    let (a, b) = (dec.cell_of(z)?, dec.cell_of(w)?);
    Ok(dec.shortest_paths(a, true).0[b])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowSum {
    pub sum_s2: f64,
    pub qh_integral: f64,
    pub terminals: usize,
    /// Cells not reachable from the base (other components).
    pub unreachable: usize,
}

/// Sum of squared shadow diameters and the cell quadrature of
/// `int dist_qh(w, base) dw`, filling in each cell's `shadow_diam`.
///
/// Geodesics follow the shortest-path tree from the base cell; each
/// boundary-adjacent cell ends one geodesic at its nearest boundary point.
/// A geodesic is drawn as the polyline through the tree's cell centres, and
/// the shadow of a cell collects the endpoints of every geodesic whose
/// polyline crosses it.
pub fn js_shadow_sum(dec: &mut WhitneyDecomposition, base: C64) -> Result<ShadowSum> {
    let (dist, pred) = dec.distances_from(base)?;
    let mut qh_integral = 0.0;
    let mut unreachable = 0;
    for (c, &d) in dec.cells.iter().zip(&dist) {
        if d.is_finite() {
            let s = c.side();
            qh_integral += s * s * d;
        } else {
            unreachable += 1;
        }
    }
    // each terminal's geodesic: base, then tree centres down to the terminal
    let mut pts: Vec<Vec<C64>> = vec![Vec::new(); dec.cells.len()];
    let mut terminals = 0;
    let mut crossed = Vec::new();
    for t in 0..dec.cells.len() {
        if !dec.cells[t].boundary_adjacent || !dist[t].is_finite() {
            continue;
        }
        terminals += 1;
        let mut chain = vec![dec.cells[t].center];
        let mut k = t;
        while pred[k] != usize::MAX {
            k = pred[k];
            chain.push(dec.cells[k].center);
        }
        chain.push(base);
        crossed.clear();
        for w in chain.windows(2) {
            dec.cells_on_segment(w[1], w[0], &mut crossed);
        }
        crossed.push(t);
        crossed.sort_unstable();
        crossed.dedup();
        let end = dec.boundary_point(dec.cells[t].center);
        for &c in &crossed {
            pts[c].push(end);
        }
    }
    let mut sum_s2 = 0.0;
    for (c, p) in dec.cells.iter_mut().zip(pts) {
        let s = diameter(&convex_hull(p));
        c.shadow_diam = s;
        sum_s2 += s * s;
    }
    Ok(ShadowSum { sum_s2, qh_integral, terminals, unreachable })
}

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Andrew's monotone chain, counter-clockwise without collinear points.
pub(crate) fn convex_hull(mut p: Vec<C64>) -> Vec<C64> {
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut h: Vec<C64> = Vec::with_capacity(2 * p.len());
    for &q in &p {
        while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
            h.pop();
        }
        h.push(q);
    }
    let lower = h.len() + 1;
    for &q in p.iter().rev().skip(1) {
        while h.len() >= lower && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
            h.pop();
        }
        h.push(q);
    }
    h.pop();
    h
}

/// Diameter of a convex polygon by rotating calipers.
pub(crate) fn diameter(h: &[C64]) -> f64 {
    match h.len() {
        0 | 1 => 0.0,
        2 => (h[0] - h[1]).norm(),
        n => {
            let mut best: f64 = 0.0;
            let mut j = 1;
            for i in 0..n {
                let ni = (i + 1) % n;
                while cross(h[i], h[ni], h[(j + 1) % n]).abs() > cross(h[i], h[ni], h[j]).abs() {
                    j = (j + 1) % n;
                }
                best = best.max((h[i] - h[j]).norm()).max((h[ni] - h[j]).norm());
            }
            best
        }
    }
}

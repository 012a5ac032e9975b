//! Bounding-volume hierarchy over line segments for nearest-distance queries.

use crate::C64;

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: C64,
    hi: C64,
}

impl Aabb {
    fn of(a: C64, b: C64) -> Self {
        Aabb { lo: C64::new(a.re.min(b.re), a.im.min(b.im)), hi: C64::new(a.re.max(b.re), a.im.max(b.im)) }
    }

    fn union(&self, o: &Aabb) -> Self {
        Aabb {
            lo: C64::new(self.lo.re.min(o.lo.re), self.lo.im.min(o.lo.im)),
            hi: C64::new(self.hi.re.max(o.hi.re), self.hi.im.max(o.hi.im)),
        }
    }

    fn dist2(&self, z: C64) -> f64 {
        let dx = (self.lo.re - z.re).max(0.0).max(z.re - self.hi.re);
        let dy = (self.lo.im - z.im).max(0.0).max(z.im - self.hi.im);
        dx * dx + dy * dy
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bbox: Aabb, start: usize, end: usize },
    Inner { bbox: Aabb, left: usize, right: usize },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
        }
    }
}

/// Segment `(a, b)` tagged with the obstacle it belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: C64,
    pub b: C64,
    pub tag: usize,
}

/// Closest point of segment `[a, b]` to `z`.
pub fn closest_on_segment(a: C64, b: C64, z: C64) -> C64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return a;
    }
    let t = (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    a + d * t
}

const LEAF: usize = 4;

#[derive(Clone, Debug, Default)]
pub struct SegmentBvh {
    segs: Vec<Segment>,
    nodes: Vec<Node>,
}

impl SegmentBvh {
    pub fn new(mut segs: Vec<Segment>) -> Self {
        let mut nodes = Vec::new();
        if !segs.is_empty() {
            let n = segs.len();
            build(&mut segs, 0, n, &mut nodes);
        }
        SegmentBvh { segs, nodes }
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Distance, tag and closest point of the nearest segment.
    pub fn nearest(&self, z: C64) -> Option<(f64, usize, C64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, 0usize, z);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &self.nodes[i] {
                Node::Leaf { bbox, start, end } => {
                    if bbox.dist2(z) >= best.0 {
                        continue;
                    }
                    for s in &self.segs[*start..*end] {
                        let p = closest_on_segment(s.a, s.b, z);
                        let d2 = (p - z).norm_sqr();
                        if d2 < best.0 {
                            best = (d2, s.tag, p);
                        }
                    }
                }
                Node::Inner { bbox, left, right } => {
                    if bbox.dist2(z) >= best.0 {
                        continue;
                    }
                    let (dl, dr) = (self.nodes[*left].bbox().dist2(z), self.nodes[*right].bbox().dist2(z));
                    // visit the nearer child first
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        Some((best.0.sqrt(), best.1, best.2))
    }
}

fn build(segs: &mut [Segment], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &mut segs[start..end];
    let bbox = slice.iter().map(|s| Aabb::of(s.a, s.b)).reduce(|a, b| a.union(&b)).unwrap();
    let id = nodes.len();
    if slice.len() <= LEAF {
        nodes.push(Node::Leaf { bbox, start, end });
        return id;
    }
    nodes.push(Node::Leaf { bbox, start, end });
    let wide = bbox.hi.re - bbox.lo.re >= bbox.hi.im - bbox.lo.im;
    let key = |s: &Segment| if wide { s.a.re + s.b.re } else { s.a.im + s.b.im };
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |p, q| key(p).total_cmp(&key(q)));
    let left = build(segs, start, start + mid, nodes);
    let right = build(segs, start + mid, end, nodes);
    nodes[id] = Node::Inner { bbox, left, right };
    id
}

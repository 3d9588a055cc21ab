use crate::error::{Error, Result};
use crate::gauge::Vec2;

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let l2 = e.norm_squared();
    let t = if l2 == 0.0 { 0.0 } else { ((p - a).dot(&e) / l2).clamp(0.0, 1.0) };
    (a + e * t - p).norm()
}

/// Whether closed segments `[p, q]` and `[a, b]` share a point.
pub fn segments_touch(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> bool {
    first_hit(p, q, a, b, 0.0).is_some()
}

/// Smallest parameter `s >= s_min` (fraction of `[p, q]`) at which `[p, q]`
/// meets the closed segment `[a, b]`. Collinear overlaps report their first
/// point past `s_min`.
fn first_hit(p: Vec2, q: Vec2, a: Vec2, b: Vec2, s_min: f64) -> Option<f64> {
    const TINY: f64 = 1e-12;
    let d = q - p;
    let e = b - a;
    let w = a - p;
    let den = cross(d, e);
    let scale = d.norm() * e.norm();
    if den.abs() > 1e-14 * scale {
        let s = cross(w, e) / den;
        let t = cross(w, d) / den;
        if s >= s_min && s <= 1.0 + TINY && (-TINY..=1.0 + TINY).contains(&t) {
            return Some(s);
        }
        return None;
    }
    // parallel
    let dn = d.norm();
    if dn == 0.0 || cross(w, d).abs() > 1e-12 * dn * (w.norm() + e.norm() + dn) {
        return None;
    }
    let d2 = d.norm_squared();
    let sa = w.dot(&d) / d2;
    let sb = (b - p).dot(&d) / d2;
    let (lo, hi) = (sa.min(sb), sa.max(sb));
    let lo = lo.max(s_min);
    if lo <= hi.min(1.0 + TINY) {
        Some(lo)
    } else {
        None
    }
}

/// A closed, simple, counterclockwise polyline.
#[derive(Debug, Clone)]
pub struct Boundary {
    vertices: Vec<Vec2>,
    lo: Vec2,
    hi: Vec2,
}

impl Boundary {
    pub fn new(vertices: Vec<Vec2>) -> Result<Boundary> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Config("polygon needs at least 3 vertices".into()));
        }
        for (k, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(Error::Config(format!("vertex {k} is not finite")));
            }
            if *v == vertices[(k + 1) % n] {
                return Err(Error::Config(format!("vertices {k} and {} coincide", (k + 1) % n)));
            }
        }
        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for v in &vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let b = Boundary { vertices, lo, hi };
        if b.signed_area() <= 0.0 {
            return Err(Error::Config("polygon must be counterclockwise".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, bb) = b.edge(i);
                let (c, d) = b.edge(j);
                if segments_touch(a, bb, c, d) {
                    return Err(Error::Config(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(b)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        (self.lo, self.hi)
    }

    /// Shoelace area, positive for counterclockwise polygons.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n).map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n])).sum::<f64>()
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Crossing-number test; points on the boundary may go either way.
    pub fn winds_around(&self, p: Vec2) -> bool {
        let mut inside = false;
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Strictly inside, at least `margin` away from the boundary.
    pub fn is_interior(&self, p: Vec2, margin: f64) -> bool {
        self.winds_around(p) && self.distance(p) > margin
    }

    /// Whether the open segment `]y, x[` lies in the open domain, given that
    /// `x` is interior. Any contact with the boundary other than at `y`
    /// itself counts as leaving.
    pub fn open_segment_inside(&self, y: Vec2, x: Vec2) -> bool {
        if y == x {
            return true;
        }
        let (slo, shi) = (y.inf(&x), y.sup(&x));
        let s_min = 1e-9;
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            if a.x.max(b.x) < slo.x || a.x.min(b.x) > shi.x || a.y.max(b.y) < slo.y || a.y.min(b.y) > shi.y {
                continue;
            }
            if first_hit(y, x, a, b, s_min).is_some() {
                return false;
            }
        }
        true
    }

    /// First boundary contact of the ray `p + t d`, `t > t_min`.
    pub fn ray_exit(&self, p: Vec2, d: Vec2, t_min: f64) -> Option<f64> {
        let (lo, hi) = self.bbox();
        let reach = (hi - lo).norm() + (p - lo).norm() + (p - hi).norm();
        let q = p + d * (reach / d.norm());
        let scale = reach / d.norm();
        let mut best: Option<f64> = None;
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            if let Some(s) = first_hit(p, q, a, b, t_min / scale) {
                let t = s * scale;
                if best.is_none_or(|bt| t < bt) {
                    best = Some(t);
                }
            }
        }
        best
    }
}

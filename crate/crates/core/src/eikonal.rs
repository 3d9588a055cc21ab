//! Lax–Hopf envelope, projections, transport rays and boundary sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauge::Vec2;
use crate::geometry::Scene;
use crate::grid::{Grid, ScalarField};

/// Grid offsets `(i, j)` with `max(|i|, |j|) <= 3` and coprime entries.
pub fn stencil() -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut out = Vec::new();
    for j in -3i64..=3 {
        for i in -3i64..=3 {
            if (i, j) != (0, 0) && gcd(i.abs(), j.abs()) == 1 {
                out.push((i, j));
            }
        }
    }
    out
}

/// Envelope data of one point.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Sample achieving the minimum; ties go to the smaller index.
    pub best: usize,
    /// Sub-sample minimizer on the boundary polyline.
    pub point: Vec2,
    /// Envelope value at the point.
    pub value: f64,
    /// Visible finite samples within the projection band, by index.
    pub near: Vec<usize>,
    /// Local minimizers among `near` along the boundary.
    pub minima: Vec<usize>,
    pub ridge: bool,
}

fn envelope_values(scene: &Scene, x: Vec2) -> Vec<f64> {
    scene
        .samples
        .iter()
        .map(|s| match s.value.finite() {
            Some(v) => v + scene.gauge.polar_value(x - s.point),
            None => f64::INFINITY,
        })
        .collect()
}

/// Projection band width.
pub fn projection_band(scene: &Scene) -> f64 {
    scene.tol.proj_h * scene.h * (scene.lip + 1.0)
}

/// Direct envelope at `x`: minimum over visible finite samples of
/// `phi(y) + rho0(x - y)`. `None` when no finite sample is visible.
pub fn envelope_at(scene: &Scene, x: Vec2) -> Option<Projection> {
    let g = envelope_values(scene, x);
    let n = g.len();
    let finite: Vec<f64> = g.iter().copied().filter(|v| v.is_finite()).collect();
    let gmin = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let gmax = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !gmin.is_finite() {
        return None;
    }
    let eps = projection_band(scene);
    let mut window = 4.0 * eps + scene.h;
    let (u, vis) = loop {
        let top = gmin + window;
        let mut cand: Vec<usize> = (0..n).filter(|&k| g[k] <= top).collect();
        cand.sort_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b)));
        let mut u: Option<f64> = None;
        let mut vis = Vec::new();
        for &k in &cand {
            if let Some(u0) = u {
                if g[k] > u0 + eps {
                    break;
                }
            }
            if scene.open_segment_in_domain(scene.samples[k].point, x) {
                u.get_or_insert(g[k]);
                vis.push(k);
            }
        }
        match u {
            Some(u0) if u0 + eps <= top || top >= gmax => break (u0, vis),
            None if top >= gmax => return None,
            _ => window *= 4.0,
        }
    };
    let best = vis[0];
    let mut near = vis;
    near.sort_unstable();
    let gn = |k: usize| if near.binary_search(&k).is_ok() { g[k] } else { f64::INFINITY };
    let minima: Vec<usize> = near
        .iter()
        .copied()
        .filter(|&k| {
            let gk = g[k];
            gk <= gn((k + n - 1) % n) && gk <= gn((k + 1) % n)
        })
        .collect();
    let dirs: Vec<Vec2> = minima
        .iter()
        .map(|&k| {
            let e = x - scene.samples[k].point;
            e / scene.gauge.polar_value(e)
        })
        .collect();
    let ridge = diameter_exceeds(&dirs, scene.tol.ridge);

    let (point, value) = refine(scene, x, best, u, &g);
    Some(Projection { best, point, value, near, minima, ridge })
}

fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut m1 = hi - r * (hi - lo);
    let mut m2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(m1), f(m2));
    for _ in 0..48 {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - r * (hi - lo);
            f1 = f(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + r * (hi - lo);
            f2 = f(m2);
        }
    }
    0.5 * (lo + hi)
}

/// Sub-sample minimizer around sample `k`. With both neighbours usable the
/// squared distance is modelled by the parabola through the three samples,
/// which follows a curved boundary instead of its chords; with one neighbour
/// the exact distance to that chord is used. The datum is interpolated
/// linearly in both cases.
fn refine(scene: &Scene, x: Vec2, k: usize, u: f64, g: &[f64]) -> (Vec2, f64) {
    let n = scene.samples.len();
    let (km, kp) = ((k + n - 1) % n, (k + 1) % n);
    let usable = |j: usize| g[j].is_finite() && scene.open_segment_in_domain(scene.samples[j].point, x);
    let (um, up) = (usable(km), usable(kp));
    let y0 = scene.samples[k].point;
    let (ym, yp) = (scene.samples[km].point, scene.samples[kp].point);
    let phi = |j: usize| scene.samples[j].value.finite().unwrap_or(f64::INFINITY);
    let (f0, fm, fp) = (phi(k), phi(km), phi(kp));
    let at = |s: f64| if s >= 0.0 { y0 + (yp - y0) * s } else { y0 + (ym - y0) * (-s) };
    let datum = |s: f64| if s >= 0.0 { f0 + (fp - f0) * s } else { f0 + (fm - f0) * (-s) };
    let best = |model: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        let s = golden(model, lo, hi);
        let v = model(s);
        if v < u {
            (at(s), v)
        } else {
            (y0, u)
        }
    };
    if um && up {
        let (dm, d0, dp) = ((g[km] - fm).powi(2), (g[k] - f0).powi(2), (g[kp] - fp).powi(2));
        let curv = dm - 2.0 * d0 + dp;
        if curv > 0.0 {
            let model = |s: f64| datum(s) + (d0 + 0.5 * (dp - dm) * s + 0.5 * curv * s * s).max(0.0).sqrt();
            return best(&model, -1.0, 1.0);
        }
    }
    let exact = |s: f64| datum(s) + scene.gauge.polar_value(x - at(s));
    match (um, up) {
        (_, true) => best(&exact, 0.0, 1.0),
        (true, false) => best(&exact, -1.0, 0.0),
        _ => (y0, u),
    }
}

fn diameter_exceeds(dirs: &[Vec2], limit: f64) -> bool {
    for (i, a) in dirs.iter().enumerate() {
        for b in &dirs[i + 1..] {
            if (a - b).norm() > limit {
                return true;
            }
        }
    }
    false
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Whether the grid segment between two active nodes stays inside.
pub(crate) fn edge_inside(scene: &Scene, a: usize, b: usize, reach: f64) -> bool {
    if !scene.active[a] || !scene.active[b] {
        return false;
    }
    if scene.dist[a] > reach && scene.dist[b] > reach {
        return true;
    }
    scene.boundary.open_segment_inside(scene.grid.point_of(a), scene.grid.point_of(b))
}

/// Reflex corners of the boundary, each nudged a tiny step into the domain
/// so that paths bending around it stay strictly inside.
pub fn reflex_corners(scene: &Scene) -> Vec<Vec2> {
    let vs = scene.boundary.vertices();
    let n = vs.len();
    let orient = scene.boundary.signed_area().signum();
    let step = 1e-7 * scene.diameter();
    let mut out = Vec::new();
    for i in 0..n {
        let (p, v, q) = (vs[(i + n - 1) % n], vs[i], vs[(i + 1) % n]);
        let (e1, e2) = ((p - v).normalize(), (q - v).normalize());
        let turn = (v - p).perp(&(q - v)) * orient;
        let scale = (v - p).norm() * (q - v).norm();
        let reversal = turn.abs() <= 1e-12 * scale && (v - p).dot(&(q - v)) < 0.0;
        if turn < -1e-12 * scale || reversal {
            let inward = -(e1 + e2);
            let dir = if inward.norm() > 1e-9 { inward.normalize() } else { Vec2::new(-e1.y, e1.x) * orient };
            let c = v + dir * step;
            if scene.boundary.winds_around(c) {
                out.push(c);
            }
        }
    }
    out
}

/// Exact geodesic envelope: the direct envelope, or a shortest path that
/// bends at reflex corners, whichever is lower. Also returns the boundary
/// sample each node's path starts from.
pub fn geodesic(scene: &Scene, direct: &[Option<Projection>]) -> Result<(ScalarField, Vec<Option<usize>>)> {
    let grid = scene.grid;
    let rho = |e: Vec2| scene.gauge.polar_value(e);
    let corners = reflex_corners(scene);
    let m = corners.len();
    let mut cval = vec![f64::INFINITY; m];
    let mut corig: Vec<Option<usize>> = vec![None; m];
    for (i, &c) in corners.iter().enumerate() {
        if let Some(p) = envelope_at(scene, c) {
            cval[i] = p.value;
            corig[i] = Some(p.best);
        }
    }
    let mut heap: BinaryHeap<Entry> = (0..m).filter(|&i| cval[i].is_finite()).map(|i| Entry(cval[i], i)).collect();
    let mut done = vec![false; m];
    while let Some(Entry(d, i)) = heap.pop() {
        if done[i] || d > cval[i] {
            continue;
        }
        done[i] = true;
        for j in 0..m {
            let nd = d + rho(corners[j] - corners[i]);
            if !done[j] && nd < cval[j] && scene.open_segment_in_domain(corners[i], corners[j]) {
                cval[j] = nd;
                corig[j] = corig[i];
                heap.push(Entry(nd, j));
            }
        }
    }
    let mut order: Vec<usize> = (0..m).filter(|&i| cval[i].is_finite()).collect();
    order.sort_by(|&a, &b| cval[a].total_cmp(&cval[b]).then(a.cmp(&b)));
    let per_node: Vec<(f64, Option<usize>)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !scene.active[k] {
                return (f64::NAN, None);
            }
            let x = grid.point_of(k);
            let (mut best, mut orig) = match &direct[k] {
                Some(p) => (p.value, Some(p.best)),
                None => (f64::INFINITY, None),
            };
            for &i in &order {
                if cval[i] >= best {
                    break;
                }
                let v = cval[i] + rho(x - corners[i]);
                if v < best && scene.open_segment_in_domain(corners[i], x) {
                    best = v;
                    orig = corig[i];
                }
            }
            (best, orig)
        })
        .collect();
    let mut field = ScalarField::unset(grid);
    let mut origin = vec![None; grid.len()];
    for (k, &(v, o)) in per_node.iter().enumerate() {
        if !scene.active[k] {
            continue;
        }
        if !v.is_finite() {
            let (i, j) = grid.ij(k);
            let p = grid.point(i, j);
            return Err(Error::Unreachable { i, j, x: p.x, y: p.y });
        }
        field.values[k] = v;
        origin[k] = o;
    }
    Ok((field, origin))
}

/// Both envelope modes on the scene grid.
#[derive(Debug, Clone)]
pub struct LaxHopf {
    /// Direct envelope; unset where no finite sample is visible.
    pub direct: ScalarField,
    pub geodesic: ScalarField,
    pub origin: Vec<Option<usize>>,
    pub projections: Vec<Option<Projection>>,
    /// Largest gap between the two modes where both exist.
    pub discrepancy: f64,
}

impl LaxHopf {
    /// Direct envelope with geodesic fill-in, or the geodesic envelope.
    pub fn profile(&self, direct: bool) -> ScalarField {
        if !direct {
            return self.geodesic.clone();
        }
        let mut u = self.direct.clone();
        for (k, v) in u.values.iter_mut().enumerate() {
            if v.is_nan() {
                *v = self.geodesic.values[k];
            }
        }
        u
    }
}

pub fn lax_hopf(scene: &Scene) -> Result<LaxHopf> {
    let grid = scene.grid;
    let projections: Vec<Option<Projection>> = (0..grid.len())
        .into_par_iter()
        .map(|k| if scene.active[k] { envelope_at(scene, grid.point_of(k)) } else { None })
        .collect();
    let mut direct = ScalarField::unset(grid);
    for (k, p) in projections.iter().enumerate() {
        if let Some(p) = p {
            direct.values[k] = p.value;
        }
    }
    let (geo, origin) = geodesic(scene, &projections)?;
    let discrepancy = direct.max_abs_diff(&geo, |_| true);
    Ok(LaxHopf { direct, geodesic: geo, origin, projections, discrepancy })
}

/// Projection set of a node: visible samples within the projection band.
pub fn project(scene: &Scene, lh: &LaxHopf, k: usize) -> Result<Vec<usize>> {
    match &lh.projections[k] {
        Some(p) if !p.near.is_empty() => Ok(p.near.clone()),
        _ => {
            let (i, j) = scene.grid.ij(k);
            Err(Error::EmptyProjection { i, j })
        }
    }
}

/// Length along `start + s d` over which `u` grows like `u0 + s`, capped at
/// the boundary exit.
pub fn march(scene: &Scene, u: &ScalarField, start: Vec2, u0: f64, d: Vec2, s0: f64) -> f64 {
    let h = scene.h;
    let tol = scene.tol.march_h * h;
    let exit = scene.boundary.ray_exit(start, d, 1e-12).unwrap_or(0.0);
    let ok = |s: f64| match u.bilinear(start + d * s) {
        Some(v) => (v - u0 - s).abs() <= tol,
        None => true,
    };
    let step = h / 2.0;
    let mut prev = s0.min(exit);
    let mut s = s0 + step;
    while s < exit {
        if !ok(s) {
            let (mut lo, mut hi) = (prev, s);
            while hi - lo > h / 16.0 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
        prev = s;
        s += step;
    }
    exit
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub sample: usize,
    pub p: Vec2,
    pub d: Vec2,
    pub a: f64,
    pub b: f64,
    pub q: Vec2,
    pub ridge: bool,
}

#[derive(Debug, Clone)]
pub struct RayField {
    pub grid: Grid,
    pub rays: Vec<Option<Ray>>,
}

impl RayField {
    pub fn ridge_mask(&self) -> Vec<bool> {
        self.rays.iter().map(|r| r.is_some_and(|r| r.ridge)).collect()
    }

    /// Active nodes with a ray that are not ridge nodes.
    pub fn regular(&self, k: usize) -> Option<&Ray> {
        self.rays[k].as_ref().filter(|r| !r.ridge)
    }

    pub fn ridge_fraction(&self, scene: &Scene) -> f64 {
        let n = scene.n_active() as f64;
        self.rays.iter().filter(|r| r.is_some_and(|r| r.ridge)).count() as f64 / n
    }
}

pub fn ray_field(scene: &Scene, lh: &LaxHopf) -> RayField {
    let grid = scene.grid;
    let u = lh.profile(true);
    let rays = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let pr = lh.projections[k].as_ref()?;
            let x = grid.point_of(k);
            let e = x - pr.point;
            let len = scene.gauge.polar_value(e);
            if len == 0.0 {
                return None;
            }
            let d = e / len;
            let b = if pr.ridge { 0.0 } else { march(scene, &u, x, u.values[k], d, 0.0) };
            Some(Ray { sample: pr.best, p: pr.point, d, a: -len, b, q: x + d * b, ridge: pr.ridge })
        })
        .collect();
    RayField { grid, rays }
}

/// Initial points, active initial points and boundary endpoints of rays.
#[derive(Debug, Clone, Default)]
pub struct BoundarySets {
    pub gamma_phi: Vec<usize>,
    pub gamma_f: Vec<usize>,
    pub j_boundary: Vec<Vec2>,
}

const PROBE_DIRS: usize = 16;

/// Directions (unit gauge length) of rays leaving sample `k`, found by
/// probing points just inside the boundary.
pub fn probe_rays(scene: &Scene, k: usize) -> Vec<Vec2> {
    let s = &scene.samples[k];
    let Some(phi) = s.value.finite() else { return Vec::new() };
    let t = 1e-6 * scene.h_b.min(scene.h);
    let mut out = Vec::new();
    for m in 0..PROBE_DIRS {
        let th = (m as f64 + 0.5) * std::f64::consts::TAU / PROBE_DIRS as f64;
        let w = Vec2::new(th.cos(), th.sin());
        let x = s.point + w * t;
        if !scene.boundary.winds_around(x) || !scene.open_segment_in_domain(s.point, x) {
            continue;
        }
        let gy = phi + scene.gauge.polar_value(x - s.point);
        let g = envelope_values(scene, x);
        let slack = 1e-12 * (1.0 + gy.abs());
        let mut lower: Vec<usize> = (0..g.len()).filter(|&j| j != k && g[j] < gy - slack).collect();
        lower.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
        if lower.iter().any(|&j| scene.open_segment_in_domain(scene.samples[j].point, x)) {
            continue;
        }
        out.push(w / scene.gauge.polar_value(w));
    }
    out
}

pub fn boundary_sets(scene: &Scene, lh: &LaxHopf, rays: &RayField) -> BoundarySets {
    let n = scene.samples.len();
    let grid = scene.grid;
    let mut phi = vec![false; n];
    let mut f = vec![false; n];
    let mut j_boundary = Vec::new();
    for k in 0..grid.len() {
        let Some(r) = rays.rays[k] else { continue };
        phi[r.sample] = true;
        if scene.source.value(grid.point_of(k)) > 0.0 {
            f[r.sample] = true;
        }
        if !r.ridge && r.b > 0.0 && scene.boundary.distance(r.q) <= scene.h_b / 2.0 {
            j_boundary.push(r.q);
        }
    }
    let u = lh.profile(true);
    let probed: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let dirs = probe_rays(scene, k);
            if dirs.is_empty() {
                return (false, false);
            }
            let y = scene.samples[k].point;
            let phi_y = scene.samples[k].value.finite().unwrap_or(0.0);
            let active = dirs.iter().any(|&d| {
                let b = march(scene, &u, y, phi_y, d, 0.0);
                let steps = (b / (scene.h / 2.0)).ceil() as usize;
                (1..=steps.max(1)).any(|m| {
                    let z = y + d * (b * m as f64 / steps.max(1) as f64);
                    scene.boundary.winds_around(z) && scene.source.value(z) > 0.0
                })
            });
            (true, active)
        })
        .collect();
    for (k, (p, a)) in probed.into_iter().enumerate() {
        phi[k] |= p;
        f[k] |= a;
    }
    for k in 0..n {
        f[k] &= phi[k];
    }
    BoundarySets {
        gamma_phi: (0..n).filter(|&k| phi[k]).collect(),
        gamma_f: (0..n).filter(|&k| f[k]).collect(),
        j_boundary,
    }
}

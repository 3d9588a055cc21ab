//! Ray slices, cross-sectional density, transport density and the minimal
//! profile.

use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;

use crate::eikonal::{edge_inside, stencil, Ray, RayField};
use crate::error::{Error, Result};
use crate::gauge::Vec2;
use crate::geometry::{Scene, Source};
use crate::grid::ScalarField;
use crate::verify::H5Certificate;

/// Divergence of the ray direction field, unset near ridge cells.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub field: ScalarField,
}

impl Divergence {
    pub fn new(scene: &Scene, rays: &RayField) -> Divergence {
        let grid = scene.grid;
        let h = scene.h;
        let dir = |k: Option<usize>| -> Option<Vec2> { rays.regular(k?).map(|r| r.d) };
        let mut field = ScalarField::unset(grid);
        for k in 0..grid.len() {
            if rays.regular(k).is_none() {
                continue;
            }
            let (Some(xp), Some(xm), Some(yp), Some(ym)) = (
                dir(grid.offset(k, 1, 0)),
                dir(grid.offset(k, -1, 0)),
                dir(grid.offset(k, 0, 1)),
                dir(grid.offset(k, 0, -1)),
            ) else {
                continue;
            };
            field.values[k] = (xp.x - xm.x + yp.y - ym.y) / (2.0 * h);
        }
        let ridge = rays.ridge_mask();
        let mut near_ridge = vec![false; grid.len()];
        for k in (0..grid.len()).filter(|&k| ridge[k]) {
            for dj in -2..=2 {
                for di in -2..=2 {
                    if let Some(m) = grid.offset(k, di, dj) {
                        near_ridge[m] = true;
                    }
                }
            }
        }
        for k in 0..grid.len() {
            if near_ridge[k] {
                field.values[k] = f64::NAN;
            }
        }
        Divergence { field }
    }

    /// Divergence at `x + t d` for each `t`; gaps reuse the nearest valid
    /// sample along the ray, and zero is used when none is valid.
    pub fn along(&self, x: Vec2, d: Vec2, ts: &[f64]) -> Vec<f64> {
        let raw: Vec<Option<f64>> = ts.iter().map(|&t| self.field.bilinear(x + d * t)).collect();
        let mut out = vec![0.0; ts.len()];
        let mut last: Option<f64> = None;
        for (i, r) in raw.iter().enumerate() {
            if let Some(v) = r {
                last = Some(*v);
            }
            out[i] = last.unwrap_or(f64::NAN);
        }
        let first = raw.iter().flatten().next().copied().unwrap_or(0.0);
        for v in out.iter_mut() {
            if v.is_nan() {
                *v = first;
            } else {
                break;
            }
        }
        out
    }
}

fn uniform(t0: f64, t1: f64, max_step: f64) -> Vec<f64> {
    let n = (((t1 - t0).abs() / max_step).ceil() as usize).max(1);
    (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
}

/// Cumulative trapezoid integral of `vals` over the nodes `ts`.
fn cumulative(ts: &[f64], vals: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        acc[i] = acc[i - 1] + 0.5 * (vals[i] + vals[i - 1]) * (ts[i] - ts[i - 1]);
    }
    acc
}

/// `alpha(x + t d) / alpha(x)`, integrated in log space.
pub fn alpha_along_ray(scene: &Scene, div: &Divergence, x: Vec2, ray: &Ray, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    if !(t > ray.a && t < ray.b) {
        return Err(Error::OutsideRay { t, a: ray.a, b: ray.b });
    }
    let ts = uniform(0.0, t, scene.h / 2.0);
    let dv = div.along(x, ray.d, &ts);
    Ok(cumulative(&ts, &dv).last().copied().unwrap_or(0.0).exp())
}

/// Forward profile of a ray: parameters, `alpha` ratios and source values.
#[derive(Debug, Clone)]
pub struct RayProfile {
    pub ts: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
}

impl RayProfile {
    pub fn new(scene: &Scene, div: &Divergence, x: Vec2, ray: &Ray) -> RayProfile {
        let ts = uniform(0.0, ray.b, scene.h / 2.0);
        let dv = div.along(x, ray.d, &ts);
        let alpha = cumulative(&ts, &dv).into_iter().map(f64::exp).collect();
        let f = ts.iter().map(|&t| scene.source.value(x + ray.d * t)).collect();
        RayProfile { ts, alpha, f }
    }

    /// `int_{t_i}^{b} f alpha` for every node `t_i`.
    pub fn tail_mass(&self) -> Vec<f64> {
        let fa: Vec<f64> = self.f.iter().zip(&self.alpha).map(|(f, a)| f * a).collect();
        let c = cumulative(&self.ts, &fa);
        let total = *c.last().unwrap_or(&0.0);
        c.iter().map(|v| total - v).collect()
    }

    pub fn density(&self) -> f64 {
        self.tail_mass().first().copied().unwrap_or(0.0)
    }
}

/// `v_f(x) = int_0^b f(x + t d) alpha(x + t d) / alpha(x) dt`; zero on ridge
/// cells.
pub fn transport_density(scene: &Scene, rays: &RayField, cert: &H5Certificate) -> ScalarField {
    transport_fields(scene, rays, cert).v
}

/// Transport density with `alpha` at the last sample before each endpoint.
#[derive(Debug, Clone)]
pub struct TransportFields {
    pub v: ScalarField,
    pub alpha_end: ScalarField,
}

pub fn transport_fields(scene: &Scene, rays: &RayField, _cert: &H5Certificate) -> TransportFields {
    let div = Divergence::new(scene, rays);
    let grid = scene.grid;
    let (v, alpha_end): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !scene.active[k] {
                return (f64::NAN, f64::NAN);
            }
            match rays.regular(k) {
                Some(r) if r.b > 0.0 => {
                    let prof = RayProfile::new(scene, &div, grid.point_of(k), r);
                    (prof.density(), prof.alpha[prof.alpha.len() - 2])
                }
                Some(_) => (0.0, 1.0),
                None => (0.0, f64::NAN),
            }
        })
        .unzip();
    TransportFields { v: ScalarField { grid, values: v }, alpha_end: ScalarField { grid, values: alpha_end } }
}

pub(crate) fn transport_density_with(scene: &Scene, rays: &RayField, div: &Divergence) -> ScalarField {
    let grid = scene.grid;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !scene.active[k] {
                return f64::NAN;
            }
            match rays.regular(k) {
                Some(r) if r.b > 0.0 => RayProfile::new(scene, div, grid.point_of(k), r).density(),
                _ => 0.0,
            }
        })
        .collect();
    ScalarField { grid, values }
}

#[derive(Debug, Clone)]
pub struct Seed {
    pub cell: usize,
    pub point: Vec2,
    pub ray: Ray,
    /// `alpha` at spacing about h/2 from `t = a` to `t = b`, equal to 1 at the seed.
    pub ts: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Seeds on one grid line `x_axis = level` with their rays.
#[derive(Debug, Clone)]
pub struct RaySlice {
    /// 1 or 2.
    pub axis: usize,
    pub level: f64,
    pub seeds: Vec<Seed>,
}

/// Slice decomposition and the cell-to-seed assignment.
#[derive(Debug, Clone)]
pub struct Slices {
    pub slices: Vec<RaySlice>,
    /// `(slice, seed)` of every regular cell.
    pub owner: Vec<Option<(usize, usize)>>,
}

fn coord(p: Vec2, axis: usize) -> f64 {
    if axis == 1 {
        p.x
    } else {
        p.y
    }
}

/// Assigns each regular cell to one grid line crossed by its ray. The line
/// is orthogonal to the dominant component of `d`, preferring a coarse line
/// near the middle of the ray so that many rays share a slice. Seeds are the
/// nodes on a line whose own ray picks that line, so every ray is counted
/// once.
pub fn build_slices(scene: &Scene, rays: &RayField, _cert: &H5Certificate) -> Slices {
    let grid = scene.grid;
    let h = scene.h;
    let (lo, hi) = scene.boundary.bbox();
    let div = Divergence::new(scene, rays);
    let origin = |axis| coord(grid.origin, axis);
    let pick: Vec<Option<(usize, i64)>> = (0..grid.len())
        .map(|k| {
            let r = rays.regular(k).filter(|r| r.b > 0.0)?;
            let axis = if r.d.x.abs() >= r.d.y.abs() { 1 } else { 2 };
            let coarse = ((coord(hi - lo, axis) / 8.0 / h).round() as i64).max(1);
            let (c0, c1) = (coord(r.p, axis), coord(r.q, axis));
            let (s0, s1) = (c0.min(c1), c0.max(c1));
            let mid = 0.5 * (c0 + c1);
            let m = ((mid - origin(axis)) / h / coarse as f64).round() as i64 * coarse;
            let z = origin(axis) + m as f64 * h;
            let line = if z > s0 + 0.5 * h && z < s1 - 0.5 * h { m } else { ((mid - origin(axis)) / h).round() as i64 };
            Some((axis, line))
        })
        .collect();
    let on_line = |k: usize, axis: usize, line: i64| {
        let (i, j) = grid.ij(k);
        (if axis == 1 { i } else { j }) as i64 == line
    };
    let mut groups: BTreeMap<(usize, i64), Vec<usize>> = BTreeMap::new();
    for k in 0..grid.len() {
        if let Some((axis, line)) = pick[k] {
            if on_line(k, axis, line) {
                groups.entry((axis, line)).or_default().push(k);
            }
        }
    }
    let mut slices = Vec::new();
    let mut seed_index: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for ((axis, line), seeds) in groups {
        let si = slices.len();
        let level = origin(axis) + line as f64 * h;
        let built: Vec<Seed> = seeds
            .par_iter()
            .map(|&s| {
                let ray = *rays.regular(s).expect("seed has a regular ray");
                let point = grid.point_of(s);
                let ts = uniform(ray.a, ray.b, h / 2.0);
                let zero = ts.iter().position(|&t| t >= 0.0).unwrap_or(0);
                let dv = div.along(point, ray.d, &ts);
                let c = cumulative(&ts, &dv);
                let base = c[zero] - dv[zero] * ts[zero];
                let alpha = c.iter().map(|v| (v - base).exp()).collect();
                Seed { cell: s, point, ray, ts, alpha }
            })
            .collect();
        for (j, s) in built.iter().enumerate() {
            seed_index.insert(s.cell, (si, j));
        }
        slices.push(RaySlice { axis, level, seeds: built });
    }
    let owner = (0..grid.len())
        .map(|k| {
            let (axis, line) = pick[k]?;
            let r = rays.regular(k)?;
            let x = grid.point_of(k);
            let z = origin(axis) + line as f64 * h;
            let cross = x + r.d * ((z - coord(x, axis)) / coord(r.d, axis));
            let near = if axis == 1 { Vec2::new(z, cross.y) } else { Vec2::new(cross.x, z) };
            let (i, j) = grid.ij(grid.nearest(near)?);
            (0..=3i64)
                .flat_map(|o| [o, -o])
                .filter_map(|o| {
                    if axis == 1 {
                        grid.offset(grid.index(i, j), 0, o)
                    } else {
                        grid.offset(grid.index(i, j), o, 0)
                    }
                })
                .filter(|&m| pick[m] == Some((axis, line)))
                .find_map(|m| seed_index.get(&m).copied())
        })
        .collect();
    Slices { slices, owner }
}

impl Slices {
    /// Fraction of active cells lying within `h` of their seed's ray.
    pub fn coverage(&self, scene: &Scene) -> f64 {
        let grid = scene.grid;
        let mut covered = 0usize;
        for k in 0..grid.len() {
            let Some((si, j)) = self.owner[k] else { continue };
            let s = &self.slices[si].seeds[j];
            let x = grid.point_of(k);
            let q = s.point + s.ray.d * s.ray.b;
            if crate::geometry::segment_distance(x, s.ray.p, q) <= scene.h {
                covered += 1;
            }
        }
        covered as f64 / scene.n_active() as f64
    }

    /// `sum over seeds of h |d_axis| int_a^b alpha`.
    pub fn area(&self, scene: &Scene) -> f64 {
        self.slices
            .iter()
            .map(|sl| {
                sl.seeds
                    .iter()
                    .map(|s| {
                        let w = scene.h * coord(s.ray.d, sl.axis).abs();
                        let integral = *cumulative(&s.ts, &s.alpha).last().unwrap_or(&0.0);
                        w * integral
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Whether rays of neighbouring seeds in a slice stay apart, checked on
    /// consecutive seeds along the line. Rays may meet at a ridge or fan out
    /// of one boundary point, so both ends are trimmed by `2h`, and crossings
    /// that leave the rays less than `h` apart stay inside the cylinder.
    pub fn rays_disjoint(&self, scene: &Scene) -> bool {
        self.crossing_pairs(scene).is_empty()
    }

    /// Consecutive seed pairs whose trimmed rays cross.
    pub fn crossing_pairs(&self, scene: &Scene) -> Vec<(Vec2, Vec2)> {
        let trim = 2.0 * scene.h;
        let seg = |s: &Seed| {
            let (a, b) = (s.ray.a + trim, s.ray.b - trim);
            (b > a).then(|| (s.point + s.ray.d * a, s.point + s.ray.d * b))
        };
        let mut out = Vec::new();
        for sl in &self.slices {
            let mut seeds: Vec<&Seed> = sl.seeds.iter().collect();
            let other = if sl.axis == 1 { 2 } else { 1 };
            seeds.sort_by(|a, b| coord(a.point, other).total_cmp(&coord(b.point, other)));
            for w in seeds.windows(2) {
                if let (Some((p, q)), Some((a, b))) = (seg(w[0]), seg(w[1])) {
                    if crossing(p, q, a, b) && reversal(p, q, a, b) > scene.h {
                        out.push((w[0].point, w[1].point));
                    }
                }
            }
        }
        out
    }
}

/// How far the second segment ends up on either side of the first one's
/// line: the smaller of the two endpoint distances.
fn reversal(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> f64 {
    let n = q - p;
    let len = n.norm();
    let dist = |z: Vec2| ((z - p).x * n.y - (z - p).y * n.x).abs() / len;
    dist(a).min(dist(b))
}

/// Proper crossing of two segments (shared endpoints do not count).
fn crossing(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> bool {
    let c = |u: Vec2, v: Vec2| u.x * v.y - u.y * v.x;
    let d1 = c(q - p, a - p);
    let d2 = c(q - p, b - p);
    let d3 = c(b - a, p - a);
    let d4 = c(b - a, q - a);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Minimal profile, or the unbounded-below convention for a zero source.
#[derive(Debug, Clone)]
pub enum MinimalProfile {
    Field(ScalarField),
    UnboundedBelow,
}

impl MinimalProfile {
    pub fn field(&self) -> Option<&ScalarField> {
        match self {
            MinimalProfile::Field(f) => Some(f),
            MinimalProfile::UnboundedBelow => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct MaxEntry(f64, usize);

impl Eq for MaxEntry {}

impl Ord for MaxEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for MaxEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `u_f(x) = sup {u_phi(z) - L(path from x to z) : f(z) > 0}` by a max-plus
/// label-setting sweep from the sampled support.
pub fn minimal_profile(scene: &Scene, u_phi: &ScalarField, source: &Source) -> MinimalProfile {
    let grid = scene.grid;
    let support: Vec<bool> = (0..grid.len()).map(|k| scene.active[k] && source.value(grid.point_of(k)) > 0.0).collect();
    if source.is_zero() || !support.iter().any(|s| *s) {
        return MinimalProfile::UnboundedBelow;
    }
    let h = scene.h;
    let mut val = vec![f64::NEG_INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    for k in 0..grid.len() {
        if support[k] {
            val[k] = u_phi.values[k];
            heap.push(MaxEntry(val[k], k));
        }
    }
    let offs: Vec<((i64, i64), f64)> = stencil()
        .into_iter()
        .map(|(i, j)| ((i, j), scene.gauge.polar_value(Vec2::new(-(i as f64) * h, -(j as f64) * h))))
        .collect();
    while let Some(MaxEntry(v, k)) = heap.pop() {
        if v < val[k] {
            continue;
        }
        for &((i, j), len) in &offs {
            let Some(m) = grid.offset(k, i, j) else { continue };
            // path from m to k has direction x_k - x_m = -(i, j) h
            let nv = v - len;
            if nv > val[m] && edge_inside(scene, m, k, 4.0 * h) {
                val[m] = nv;
                heap.push(MaxEntry(nv, m));
            }
        }
    }
    let values = (0..grid.len()).map(|k| if scene.active[k] { val[k] } else { f64::NAN }).collect();
    MinimalProfile::Field(ScalarField { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::solved;

    fn node(scene: &Scene, x: f64, y: f64) -> usize {
        scene.grid.nearest(Vec2::new(x, y)).unwrap()
    }

    #[test]
    fn alpha_is_one_at_the_seed() {
        let s = solved("disk", 64);
        let div = Divergence::new(&s.scene, &s.rays);
        let k = node(&s.scene, 0.5, 0.0);
        let ray = s.rays.regular(k).unwrap();
        assert_eq!(alpha_along_ray(&s.scene, &div, s.scene.grid.point_of(k), ray, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn alpha_rejects_parameters_outside_the_ray() {
        let s = solved("disk", 64);
        let div = Divergence::new(&s.scene, &s.rays);
        let k = node(&s.scene, 0.5, 0.0);
        let ray = s.rays.regular(k).unwrap();
        let x = s.scene.grid.point_of(k);
        for t in [ray.b + 0.01, ray.a - 0.01, f64::NAN] {
            assert!(matches!(alpha_along_ray(&s.scene, &div, x, ray, t), Err(Error::OutsideRay { .. })));
        }
    }

    #[test]
    fn alpha_shrinks_linearly_toward_the_disk_center() {
        let s = solved("disk", 64);
        let div = Divergence::new(&s.scene, &s.rays);
        let k = node(&s.scene, 0.5, 0.0);
        let ray = s.rays.regular(k).unwrap();
        let x = s.scene.grid.point_of(k);
        let got = alpha_along_ray(&s.scene, &div, x, ray, 0.25).unwrap();
        assert!((got - 0.5).abs() <= 4.0 * s.scene.h, "{got}");
        let back = alpha_along_ray(&s.scene, &div, x, ray, -0.25).unwrap();
        assert!((back - 1.5).abs() <= 4.0 * s.scene.h, "{back}");
    }

    #[test]
    fn alpha_matches_the_spacing_of_adjacent_rays() {
        // cross-section ratio of two neighbouring rays, measured directly
        let s = solved("disk", 64);
        let div = Divergence::new(&s.scene, &s.rays);
        let grid = s.scene.grid;
        for &(x0, y0) in &[(0.5, 0.1), (-0.3, 0.6), (0.2, -0.7)] {
            let k = node(&s.scene, x0, y0);
            let m = grid.offset(k, 0, 1).unwrap();
            let (rk, rm) = (s.rays.regular(k).unwrap(), s.rays.regular(m).unwrap());
            let (xk, xm) = (grid.point_of(k), grid.point_of(m));
            let t = 0.5 * rk.b;
            let normal = |d: Vec2| Vec2::new(-d.y, d.x);
            let gap0 = (xm - xk).dot(&normal(rk.d)).abs();
            let gap = ((xm + rm.d * t) - (xk + rk.d * t)).dot(&normal(rk.d)).abs();
            let alpha = alpha_along_ray(&s.scene, &div, xk, rk, t).unwrap();
            assert!((alpha - gap / gap0).abs() < 0.05, "{alpha} vs {}", gap / gap0);
        }
    }

    #[test]
    fn alpha_is_constant_along_parallel_rays() {
        let s = solved("rect", 64);
        let div = Divergence::new(&s.scene, &s.rays);
        let k = node(&s.scene, 0.25, 0.25);
        let ray = s.rays.regular(k).unwrap();
        let x = s.scene.grid.point_of(k);
        for t in [-0.2, 0.1, 0.5, 0.7] {
            let a = alpha_along_ray(&s.scene, &div, x, ray, t).unwrap();
            assert!((a - 1.0).abs() < 1e-9, "{t} {a}");
        }
    }

    fn l1(scene: &Scene, v: &ScalarField, f: impl Fn(Vec2) -> f64) -> f64 {
        let grid = scene.grid;
        (0..grid.len()).filter(|&k| scene.active[k]).map(|k| (v.values[k] - f(grid.point_of(k))).abs()).sum::<f64>()
            * scene.h
            * scene.h
    }

    #[test]
    fn disk_density_is_half_the_radius() {
        let s = solved("disk", 64);
        let v = transport_density(&s.scene, &s.rays, s.cert());
        let err = l1(&s.scene, &v, |x| x.norm() / 2.0);
        assert!(err <= 5.0 * s.scene.h, "{err}");
        let k = node(&s.scene, 0.5, 0.0);
        assert!((v.values[k] - 0.25).abs() < 0.01, "{}", v.values[k]);
    }

    #[test]
    fn strip_density_grows_toward_the_initial_edge() {
        let s = solved("rect", 64);
        let v = transport_density(&s.scene, &s.rays, s.cert());
        let err = l1(&s.scene, &v, |x| 1.0 - x.y);
        assert!(err <= 2.0 * s.scene.h, "{err}");
    }

    #[test]
    fn zero_source_gives_zero_density() {
        let s = solved("disk", 64);
        let scene = s.scene.with_source(Source::Constant(0.0));
        let v = transport_density(&scene, &s.rays, s.cert());
        assert!(v.values.iter().all(|v| v.is_nan() || *v == 0.0));
    }

    #[test]
    fn density_vanishes_on_rays_missing_the_source() {
        let s = solved("rect", 64);
        let f = Source::Disk { center: Vec2::new(0.0, 0.5), radius: 0.2, amplitude: 1.0 };
        let scene = s.scene.with_source(f);
        let v = transport_density(&scene, &s.rays, s.cert());
        let grid = scene.grid;
        for k in (0..grid.len()).filter(|&k| scene.active[k]) {
            let x = grid.point_of(k);
            assert!(v.values[k] >= 0.0);
            if x.x.abs() > 0.25 || x.y > 0.75 {
                assert_eq!(v.values[k], 0.0, "{x:?}");
            }
        }
    }

    #[test]
    fn density_solves_the_ray_equation_in_integral_form() {
        let s = solved("disk", 64);
        let scene = &s.scene;
        let div = Divergence::new(scene, &s.rays);
        let v = transport_density_with(scene, &s.rays, &div);
        let grid = scene.grid;
        let cells: Vec<usize> = (0..grid.len()).filter(|&k| s.rays.regular(k).is_some()).collect();
        let tol = 8.0 * scene.h;
        for &k in cells.iter().step_by(cells.len() / 100) {
            let x = grid.point_of(k);
            let ray = s.rays.regular(k).unwrap();
            let prof = RayProfile::new(scene, &div, x, ray);
            assert!(prof.alpha.iter().all(|a| *a > 0.0));
            let tail = prof.tail_mass();
            for i in 0..prof.ts.len() {
                let Some(vi) = v.bilinear(x + ray.d * prof.ts[i]) else { continue };
                assert!((vi * prof.alpha[i] - tail[i]).abs() <= tol, "{x:?} t={}", prof.ts[i]);
            }
            let last = prof.ts.len() - 2;
            if let Some(vl) = v.bilinear(x + ray.d * prof.ts[last]) {
                assert!(vl * prof.alpha[last] <= tol, "terminal {x:?}");
            }
        }
    }

    #[test]
    fn minimal_profile_equals_the_maximal_one_for_full_support() {
        let s = solved("disk", 64);
        let u = s.lh.profile(true);
        let uf = minimal_profile(&s.scene, &u, &s.scene.source);
        let d = uf.field().unwrap().max_abs_diff(&u, |k| s.scene.active[k]);
        assert!(d <= 1e-9, "{d}");
    }

    #[test]
    fn minimal_profile_for_an_annulus_matches_direct_maximization() {
        let s = solved("disk", 64);
        let scene = &s.scene;
        let f = Source::Annulus { center: Vec2::zeros(), inner: 0.5, outer: 0.75, amplitude: 1.0 };
        let u = s.lh.profile(true);
        let uf = minimal_profile(scene, &u, &f);
        let uf = uf.field().unwrap();
        let grid = scene.grid;
        let support: Vec<usize> =
            (0..grid.len()).filter(|&k| scene.active[k] && f.value(grid.point_of(k)) > 0.0).collect();
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.1), (-0.9, 0.2), (0.6, -0.1)] {
            let k = node(scene, x, y);
            let p = grid.point_of(k);
            let best =
                support.iter().map(|&z| u.values[z] - (grid.point_of(z) - p).norm()).fold(f64::NEG_INFINITY, f64::max);
            assert!((uf.values[k] - best).abs() <= 0.02 * (1.0 + (grid.point_of(support[0]) - p).norm()), "{p:?}");
        }
        let k0 = node(scene, 0.0, 0.0);
        assert!(uf.values[k0].abs() <= 8.0 * scene.h);
        for k in (0..grid.len()).filter(|&k| scene.active[k]) {
            assert!(uf.values[k] <= u.values[k] + 1e-12);
        }
    }

    #[test]
    fn zero_source_has_no_minimal_profile() {
        let s = solved("disk", 64);
        let u = s.lh.profile(true);
        assert!(matches!(minimal_profile(&s.scene, &u, &Source::Constant(0.0)), MinimalProfile::UnboundedBelow));
    }

    #[test]
    fn axis_seeds_on_the_disk_point_at_the_center() {
        let s = solved("disk", 64);
        let sl = build_slices(&s.scene, &s.rays, s.cert());
        let mut seen = 0;
        for slice in &sl.slices {
            for seed in &slice.seeds {
                if seed.point.y == 0.0 && seed.point.x.abs() > 0.1 {
                    assert_eq!(slice.axis, 1);
                    assert!((seed.ray.d - Vec2::new(-seed.point.x.signum(), 0.0)).norm() < 1e-3);
                    seen += 1;
                }
                assert!(s.rays.regular(seed.cell).is_some());
                assert!(seed.alpha.iter().all(|a| *a > 0.0));
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn disk_slices_cover_the_domain() {
        let s = solved("disk", 64);
        let sl = build_slices(&s.scene, &s.rays, s.cert());
        assert!(sl.coverage(&s.scene) >= 0.98);
        let area = sl.area(&s.scene);
        assert!((area / s.scene.area() - 1.0).abs() <= 0.02, "{area}");
        assert!(sl.rays_disjoint(&s.scene));
    }

    #[test]
    fn parallel_rays_use_horizontal_slices() {
        let s = solved("rect", 64);
        let sl = build_slices(&s.scene, &s.rays, s.cert());
        assert!(sl.slices.iter().all(|x| x.axis == 2));
        assert!(sl.rays_disjoint(&s.scene));
        assert!(sl.coverage(&s.scene) >= 0.98);
        let area = sl.area(&s.scene);
        assert!((area / s.scene.area() - 1.0).abs() <= 0.02, "{area}");
    }
}

//! Hypothesis checks, the weak-form solution check, the uniqueness test
//! and the stability bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::eikonal::{BoundarySets, LaxHopf, RayField};
use crate::error::{Error, Result};
use crate::gauge::Vec2;
use crate::geometry::{Scene, Source};
use crate::grid::ScalarField;
use crate::transport::{transport_density_with, Divergence};

const MAX_WITNESSES: usize = 50;

/// Proof that the segment-visibility hypothesis was checked and held.
#[derive(Debug, Clone)]
pub struct H5Certificate {
    _private: (),
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// `"segment"` when `]y, x[` leaves the domain, `"profile"` when the
    /// direct and geodesic profiles disagree at `x`.
    pub kind: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct H5Report {
    pub pass: bool,
    pub violations: usize,
    pub max_discrepancy: f64,
    pub witnesses: Vec<Witness>,
}

fn arr(p: Vec2) -> [f64; 2] {
    [p.x, p.y]
}

/// Every projection segment lies in the domain and the straight-line
/// profile agrees with the geodesic one within `h5_agree_h * h`.
pub fn check_h5(scene: &Scene, lh: &LaxHopf) -> (H5Report, Option<H5Certificate>) {
    let grid = scene.grid;
    let agree = scene.tol.h5_agree_h * scene.h;
    let per_cell: Vec<(f64, Vec<Witness>)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !scene.active[k] {
                return (0.0, Vec::new());
            }
            let x = grid.point_of(k);
            let mut out = Vec::new();
            if let Some(pr) = &lh.projections[k] {
                for &j in std::iter::once(&pr.best).chain(pr.minima.iter()) {
                    let y = scene.samples[j].point;
                    if !scene.open_segment_in_domain(y, x) {
                        out.push(Witness { x: arr(x), y: arr(y), kind: "segment" });
                    }
                }
            }
            if let Some(o) = lh.origin[k] {
                let y = scene.samples[o].point;
                if !scene.open_segment_in_domain(y, x) {
                    out.push(Witness { x: arr(x), y: arr(y), kind: "segment" });
                }
            }
            let g = lh.geodesic.values[k];
            let diff = match lh.direct.get(k) {
                Some(d) => (d - g).abs(),
                None => f64::INFINITY,
            };
            if diff > agree && out.is_empty() {
                let y = lh.origin[k].map_or(x, |o| scene.samples[o].point);
                out.push(Witness { x: arr(x), y: arr(y), kind: "profile" });
            }
            (diff, out)
        })
        .collect();
    let mut violations = 0;
    let mut max_discrepancy: f64 = 0.0;
    let mut witnesses = Vec::new();
    for (d, w) in per_cell {
        max_discrepancy = max_discrepancy.max(d);
        violations += w.len();
        for w in w {
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(w);
            }
        }
    }
    let pass = violations == 0;
    let cert = pass.then_some(H5Certificate { _private: () });
    (H5Report { pass, violations, max_discrepancy, witnesses }, cert)
}

#[derive(Debug, Clone, Serialize)]
pub struct H6Report {
    pub pass: bool,
    /// `None` when there are no boundary endpoints.
    pub min_distance: Option<f64>,
    /// The closest endpoint and initial point.
    pub closest: Option<[[f64; 2]; 2]>,
}

/// Boundary endpoints of rays stay more than `h6_h * h` from every initial
/// point.
pub fn check_h6(scene: &Scene, sets: &BoundarySets) -> H6Report {
    let best = sets
        .j_boundary
        .par_iter()
        .filter_map(|&q| {
            sets.gamma_phi
                .iter()
                .map(|&s| {
                    let y = scene.samples[s].point;
                    ((q - y).norm(), q, y)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.x.total_cmp(&b.1.x)).then(a.1.y.total_cmp(&b.1.y)));
    match best {
        None => H6Report { pass: true, min_distance: None, closest: None },
        Some((d, q, y)) => {
            H6Report { pass: d > scene.tol.h6_h * scene.h, min_distance: Some(d), closest: Some([arr(q), arr(y)]) }
        }
    }
}

/// The bump `amplitude * exp(1 / (s - 1))`, `s = |x - c|^2 / r^2`, on the
/// open ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl TestFunction {
    /// Rejects degenerate bumps and bumps whose support reaches within `2h`
    /// of an active initial point.
    pub fn new(scene: &Scene, sets: &BoundarySets, center: Vec2, radius: f64, amplitude: f64) -> Result<TestFunction> {
        if !(radius > 0.0 && radius.is_finite()) || !(amplitude != 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidTestFunction(format!("radius {radius}, amplitude {amplitude}")));
        }
        if !center.x.is_finite() || !center.y.is_finite() {
            return Err(Error::InvalidTestFunction("center is not finite".into()));
        }
        let band = radius + 2.0 * scene.h;
        if let Some(&s) = sets.gamma_f.iter().find(|&&s| (scene.samples[s].point - center).norm() <= band) {
            let p = scene.samples[s].point;
            return Err(Error::InvalidTestFunction(format!(
                "support meets the source boundary near ({}, {})",
                p.x, p.y
            )));
        }
        Ok(TestFunction { center: arr(center), radius, amplitude })
    }

    fn s(&self, x: Vec2) -> (f64, Vec2) {
        let e = x - Vec2::new(self.center[0], self.center[1]);
        (e.norm_squared() / (self.radius * self.radius), e)
    }

    pub fn value(&self, x: Vec2) -> f64 {
        let (s, _) = self.s(x);
        if s >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 / (s - 1.0)).exp()
        }
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let (s, e) = self.s(x);
        if s >= 1.0 {
            return Vec2::zeros();
        }
        let v = self.amplitude * (1.0 / (s - 1.0)).exp();
        e * (-v / ((s - 1.0) * (s - 1.0)) * 2.0 / (self.radius * self.radius))
    }
}

/// Random admissible bumps with radius in `[4h, diam / 8]` whose support
/// stays `2h` inside the domain. Supports cut by the boundary would carry a
/// quadrature error of order `h / r` from the partial cells.
pub fn random_tests(scene: &Scene, sets: &BoundarySets, n: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = scene.boundary.bbox();
    let r0 = 4.0 * scene.h;
    let r1 = (scene.diameter() / 8.0).max(r0);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < n && tries < 200 * n.max(1) {
        tries += 1;
        let c = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        let r = if r1 > r0 { rng.gen_range(r0..r1) } else { r0 };
        if !scene.boundary.winds_around(c) || scene.boundary.distance(c) <= r + 2.0 * scene.h {
            continue;
        }
        if let Ok(t) = TestFunction::new(scene, sets, c, r, 1.0) {
            out.push(t);
        }
    }
    out
}

/// A candidate pair `(u, v)` on the scene grid.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    pub u: ScalarField,
    pub v: ScalarField,
}

impl SolutionPair {
    pub fn new(scene: &Scene, u: ScalarField, v: ScalarField) -> Result<SolutionPair> {
        for (name, f) in [("u", &u), ("v", &v)] {
            if !f.grid.same_as(&scene.grid) {
                return Err(Error::GridMismatch(format!("{name} is not on the scene grid")));
            }
        }
        Ok(SolutionPair { u, v })
    }
}

/// Discrete gradient: central differences, one-sided where a neighbour is
/// unset.
pub fn grad(u: &ScalarField, k: usize) -> Option<Vec2> {
    let g = u.grid;
    let c = u.get(k)?;
    let axis = |di: i64, dj: i64| -> Option<f64> {
        let p = g.offset(k, di, dj).and_then(|m| u.get(m));
        let m = g.offset(k, -di, -dj).and_then(|m| u.get(m));
        match (p, m) {
            (Some(p), Some(m)) => Some((p - m) / (2.0 * g.h)),
            (Some(p), None) => Some((p - c) / g.h),
            (None, Some(m)) => Some((c - m) / g.h),
            (None, None) => None,
        }
    };
    Some(Vec2::new(axis(1, 0)?, axis(0, 1)?))
}

/// Nodes within two cells of a kink of `u`: a jump between forward and
/// backward differences larger than `jump`.
pub fn singular_mask(u: &ScalarField, jump: f64) -> Vec<bool> {
    let g = u.grid;
    let kink: Vec<bool> = (0..g.len())
        .map(|k| {
            let Some(c) = u.get(k) else { return false };
            [(1, 0), (0, 1)].iter().any(|&(di, dj)| {
                let p = g.offset(k, di, dj).and_then(|m| u.get(m));
                let m = g.offset(k, -di, -dj).and_then(|m| u.get(m));
                match (p, m) {
                    (Some(p), Some(m)) => ((p - c) - (c - m)).abs() / g.h > jump,
                    _ => false,
                }
            })
        })
        .collect();
    let mut mask = vec![false; g.len()];
    for k in (0..g.len()).filter(|&k| kink[k]) {
        for dj in -2..=2 {
            for di in -2..=2 {
                if let Some(m) = g.offset(k, di, dj) {
                    mask[m] = true;
                }
            }
        }
    }
    mask
}

/// Gradient jump that marks a kink.
pub const KINK_JUMP: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct WeakEntry {
    pub id: usize,
    pub test: TestFunction,
    pub residual: f64,
    pub scale: f64,
    pub pass: bool,
}

/// `|sum v <D rho(grad u), grad psi> h^2 - sum f psi h^2|` and its scale.
pub fn weak_residual(scene: &Scene, pair: &SolutionPair, psi: &TestFunction) -> (f64, f64) {
    let mask = singular_mask(&pair.u, KINK_JUMP);
    weak_residual_masked(scene, pair, &mask, psi)
}

fn weak_residual_masked(scene: &Scene, pair: &SolutionPair, mask: &[bool], psi: &TestFunction) -> (f64, f64) {
    let grid = scene.grid;
    let h2 = scene.h * scene.h;
    let c = Vec2::new(psi.center[0], psi.center[1]);
    let (mut flux, mut mass, mut scale) = (0.0, 0.0, 0.0);
    for k in grid.within(c, psi.radius) {
        if !scene.active[k] {
            continue;
        }
        let x = grid.point_of(k);
        let f = scene.source.value(x);
        let p = psi.value(x);
        mass += f * p * h2;
        scale += (f * p).abs() * h2;
        let Some(v) = pair.v.get(k) else { continue };
        let dpsi = psi.gradient(x);
        scale += v.abs() * dpsi.norm() * h2;
        if mask[k] || v == 0.0 {
            continue;
        }
        let Some(du) = grad(&pair.u, k) else { continue };
        if let Ok(dr) = scene.gauge.gradient(du) {
            flux += v * dr.dot(&dpsi) * h2;
        }
    }
    ((flux - mass).abs(), scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub bound: f64,
}

impl Check {
    fn at_most(name: &'static str, value: f64, bound: f64) -> Check {
        Check { name, pass: value <= bound, value, bound }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub pass: bool,
    pub checks: Vec<Check>,
    pub weak: Vec<WeakEntry>,
}

fn nearest_value(scene: &Scene, u: &ScalarField, y: Vec2) -> Option<f64> {
    let grid = scene.grid;
    let mut best: Option<(f64, f64)> = None;
    for k in grid.within(y, 2.0 * scene.h) {
        let Some(v) = u.get(k) else { continue };
        let d = (grid.point_of(k) - y).norm();
        if best.is_none_or(|b| d < b.0) {
            best = Some((d, v));
        }
    }
    best.map(|b| b.1)
}

/// Nodes within `r` of an active initial point or a boundary ray endpoint,
/// where densities may blow up.
fn source_band(scene: &Scene, sets: &BoundarySets, r: f64) -> Vec<bool> {
    let mut band = vec![false; scene.grid.len()];
    let points = sets.gamma_f.iter().map(|&s| scene.samples[s].point).chain(sets.j_boundary.iter().copied());
    for p in points {
        for k in scene.grid.within(p, r) {
            band[k] = true;
        }
    }
    band
}

/// Membership checks for `u`: gauge constraint off kinks and off the band
/// around active initial points and ray endpoints, `u <= phi` on the
/// boundary and `u = phi` on active initial points.
fn membership(scene: &Scene, u: &ScalarField, mask: &[bool], band: &[bool], sets: &BoundarySets) -> Vec<Check> {
    let tol = scene.tol.c * scene.h;
    let grid = scene.grid;
    let mut lip: f64 = 0.0;
    for k in 0..grid.len() {
        if scene.active[k] && !mask[k] && !band[k] {
            if let Some(du) = grad(u, k) {
                lip = lip.max(scene.gauge.value(du));
            }
        }
    }
    let mut above: f64 = f64::NEG_INFINITY;
    for s in &scene.samples {
        if let (Some(phi), Some(v)) = (s.value.finite(), nearest_value(scene, u, s.point)) {
            above = above.max(v - phi);
        }
    }
    let mut gap: f64 = 0.0;
    for &k in &sets.gamma_f {
        let s = &scene.samples[k];
        if let (Some(phi), Some(v)) = (s.value.finite(), nearest_value(scene, u, s.point)) {
            gap = gap.max((v - phi).abs());
        }
    }
    vec![
        Check::at_most("gauge_constraint", lip, 1.0 + tol),
        Check::at_most("below_datum", above.max(0.0), tol),
        Check::at_most("datum_on_source_boundary", gap, tol),
    ]
}

/// Sign, constraint, complementarity and weak-form checks for a pair.
pub fn verify_solution(
    scene: &Scene,
    pair: &SolutionPair,
    sets: &BoundarySets,
    n_tests: usize,
    seed: u64,
) -> SolutionReport {
    let grid = scene.grid;
    let tol = scene.tol.c * scene.h;
    let mask = singular_mask(&pair.u, KINK_JUMP);
    let mut checks = Vec::new();
    let min_v = pair.v.values.iter().filter(|v| !v.is_nan()).fold(f64::INFINITY, |a, &b| a.min(b));
    checks.push(Check { name: "nonnegative_density", pass: !(min_v < 0.0), value: min_v.min(0.0), bound: 0.0 });
    let band = source_band(scene, sets, tol);
    checks.extend(membership(scene, &pair.u, &mask, &band, sets));
    // densities are only integrable near the source boundary, so the
    // product is taken with the density capped at 1
    let mut comp: f64 = 0.0;
    for k in 0..grid.len() {
        if !scene.active[k] || mask[k] || band[k] {
            continue;
        }
        if let (Some(v), Some(du)) = (pair.v.get(k), grad(&pair.u, k)) {
            comp = comp.max((1.0 - scene.gauge.value(du)) * v.min(1.0));
        }
    }
    checks.push(Check::at_most("complementarity", comp, tol));
    let weak: Vec<WeakEntry> = random_tests(scene, sets, n_tests, seed)
        .into_par_iter()
        .enumerate()
        .map(|(id, test)| {
            let (residual, scale) = weak_residual_masked(scene, pair, &mask, &test);
            let pass = scale > 0.0 && residual <= scene.tol.weak * scale;
            WeakEntry { id, test, residual, scale, pass }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass) && weak.iter().all(|w| w.pass);
    SolutionReport { pass, checks, weak }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub unique: bool,
    pub uncovered_count: usize,
    pub uncovered: Vec<[f64; 2]>,
}

/// Unique iff every ray endpoint lies within `j_h * h` of a grid node where
/// the source is positive.
pub fn uniqueness_predicate(scene: &Scene, rays: &RayField, source: &Source) -> UniquenessReport {
    let grid = scene.grid;
    let support: Vec<bool> = (0..grid.len()).map(|k| scene.active[k] && source.value(grid.point_of(k)) > 0.0).collect();
    let r = scene.tol.j_h * scene.h;
    let near_support = |q: Vec2| grid.within(q, r).into_iter().any(|k| support[k]);
    let uncovered: Vec<[f64; 2]> =
        rays.rays.par_iter().filter_map(|r| r.as_ref()).filter(|r| !near_support(r.q)).map(|r| arr(r.q)).collect();
    UniquenessReport {
        unique: uncovered.is_empty() && support.iter().any(|s| *s),
        uncovered_count: uncovered.len(),
        uncovered: uncovered.into_iter().take(MAX_WITNESSES).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

/// `u` minimizes the constrained problem iff it is admissible and agrees
/// with `u_phi` on the support of the source.
pub fn minimizer_check(
    scene: &Scene,
    u: &ScalarField,
    u_phi: &ScalarField,
    source: &Source,
    sets: &BoundarySets,
) -> MinimizerReport {
    let grid = scene.grid;
    let mask = singular_mask(u, KINK_JUMP);
    let band = source_band(scene, sets, scene.tol.c * scene.h);
    let mut checks = membership(scene, u, &mask, &band, sets);
    let mut gap: f64 = 0.0;
    for k in 0..grid.len() {
        if scene.active[k] && source.value(grid.point_of(k)) > 0.0 {
            match (u.get(k), u_phi.get(k)) {
                (Some(a), Some(b)) => gap = gap.max((a - b).abs()),
                _ => gap = f64::INFINITY,
            }
        }
    }
    checks.push(Check::at_most("agrees_on_support", gap, scene.tol.c * scene.h));
    MinimizerReport { pass: checks.iter().all(|c| c.pass), checks }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `|v_f1 - v_f2|_1 <= diam |f1 - f2|_1 + c h`.
pub fn stability_check(
    scene: &Scene,
    rays: &RayField,
    f1: &Source,
    f2: &Source,
    _cert: &H5Certificate,
) -> StabilityReport {
    let div = Divergence::new(scene, rays);
    stability_with(scene, rays, &div, f1, f2)
}

pub(crate) fn stability_with(
    scene: &Scene,
    rays: &RayField,
    div: &Divergence,
    f1: &Source,
    f2: &Source,
) -> StabilityReport {
    let grid = scene.grid;
    let h2 = scene.h * scene.h;
    let v1 = transport_density_with(&scene.with_source(f1.clone()), rays, div);
    let v2 = transport_density_with(&scene.with_source(f2.clone()), rays, div);
    let mut lhs = 0.0;
    let mut df = 0.0;
    for k in 0..grid.len() {
        if scene.active[k] {
            let x = grid.point_of(k);
            lhs += (v1.values[k] - v2.values[k]).abs() * h2;
            df += (f1.value(x) - f2.value(x)).abs() * h2;
        }
    }
    let rhs = scene.diameter() * df + scene.tol.c * scene.h;
    StabilityReport { lhs, rhs, pass: lhs <= rhs }
}

/// Stability over a batch of source pairs sharing one ray field.
pub fn stability_batch(
    scene: &Scene,
    rays: &RayField,
    pairs: &[(Source, Source)],
    _cert: &H5Certificate,
) -> Vec<StabilityReport> {
    let div = Divergence::new(scene, rays);
    pairs.iter().map(|(a, b)| stability_with(scene, rays, &div, a, b)).collect()
}

/// Pass/fail record of a named property.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantOutcome {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub h5: Option<H5Report>,
    pub h6: Option<H6Report>,
    pub weak: Vec<WeakEntry>,
    pub solution: Option<SolutionReport>,
    pub uniqueness: Option<UniquenessReport>,
    pub minimizer: Option<MinimizerReport>,
    pub stability: Option<StabilityReport>,
    pub invariants: Vec<InvariantOutcome>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

//! Bundled fixtures with their closed-form fields and scripted checks.

use sandflow_core::eikonal::BoundarySets;
use sandflow_core::fixtures::{
    c_flat, c_ramp, disk_u, disk_v, ex1_u, ex2_exit_set, ex2_u, ex2_v, ex3_branch, ex3_exit_set, ex3_u, fixture_spec,
    sector_w, FIXTURES,
};
use sandflow_core::geometry::Scene;
use sandflow_core::grid::{write_csv, ScalarField};
use sandflow_core::transport::{minimal_profile, transport_fields};
use sandflow_core::verify::{uniqueness_predicate, verify_solution, InvariantOutcome, SolutionPair};
use sandflow_core::{Error, Vec2};

use crate::pipeline::{solve, Solved};
use crate::Failure;

/// Everything `example` writes and prints.
pub struct ExampleRun {
    pub scene_json: String,
    pub oracle_csv: String,
    pub solved: Solved,
    pub checks: Vec<InvariantOutcome>,
}

fn at_most(name: &str, value: f64, bound: f64) -> InvariantOutcome {
    InvariantOutcome { name: name.into(), pass: value <= bound, value, bound }
}

fn holds(name: &str, pass: bool) -> InvariantOutcome {
    InvariantOutcome { name: name.into(), pass, value: f64::from(u8::from(pass)), bound: 1.0 }
}

pub fn field(scene: &Scene, f: impl Fn(Vec2) -> f64) -> ScalarField {
    ScalarField::from_fn(scene.grid, &scene.active, f)
}

/// Largest `|u - f|` over active nodes accepted by `keep`.
pub fn sup_error(scene: &Scene, u: &ScalarField, f: impl Fn(Vec2) -> f64, keep: impl Fn(Vec2) -> bool) -> f64 {
    let grid = scene.grid;
    (0..grid.len())
        .filter(|&k| scene.active[k] && keep(grid.point_of(k)))
        .map(|k| (u.values[k] - f(grid.point_of(k))).abs())
        .fold(0.0, f64::max)
}

pub fn l1_error(scene: &Scene, u: &ScalarField, f: impl Fn(Vec2) -> f64) -> f64 {
    let grid = scene.grid;
    (0..grid.len()).filter(|&k| scene.active[k]).map(|k| (u.values[k] - f(grid.point_of(k))).abs()).sum::<f64>()
        * scene.h
        * scene.h
}

/// Largest gap between consecutive boundary samples.
pub fn sample_spacing(scene: &Scene) -> f64 {
    let s = &scene.samples;
    (0..s.len()).map(|i| (s[(i + 1) % s.len()].point - s[i].point).norm()).fold(0.0, f64::max)
}

/// Whether the sample subset `got` and the points accepted by `expected`
/// are within `tol` of each other in both directions.
pub fn same_samples(scene: &Scene, got: &[usize], expected: impl Fn(Vec2) -> bool, tol: f64) -> bool {
    let pts: Vec<Vec2> = got.iter().map(|&k| scene.samples[k].point).collect();
    let want: Vec<Vec2> = scene.samples.iter().map(|s| s.point).filter(|&p| expected(p)).collect();
    let near = |p: Vec2, set: &[Vec2]| set.iter().any(|q| (p - q).norm() <= tol);
    !pts.is_empty() && pts.iter().all(|&p| near(p, &want)) && want.iter().all(|&p| near(p, &pts))
}

/// Boundary sets given by closed-form sets of initial points and ray
/// endpoints.
pub fn sets_from(scene: &Scene, initial: impl Fn(Vec2) -> bool, end: impl Fn(Vec2) -> bool) -> BoundarySets {
    let idx: Vec<usize> = (0..scene.samples.len()).filter(|&k| initial(scene.samples[k].point)).collect();
    let j_boundary = scene.samples.iter().map(|s| s.point).filter(|&p| end(p)).collect();
    BoundarySets { gamma_phi: idx.clone(), gamma_f: idx, j_boundary }
}

fn oracle_csv(scene: &Scene, u: impl Fn(Vec2) -> f64, v: Option<&dyn Fn(Vec2) -> f64>) -> String {
    let uf = field(scene, u);
    let vf = match v {
        Some(v) => field(scene, v),
        None => ScalarField::unset(scene.grid),
    };
    write_csv(&scene.grid, &[("u", &uf.values), ("v", &vf.values)])
}

pub fn run_example(id: &str, h: f64, seed: u64) -> Result<ExampleRun, Failure> {
    if !FIXTURES.contains(&id) {
        return Err(Failure::config(format!("unknown fixture `{id}`, expected one of {FIXTURES:?}")));
    }
    let spec = fixture_spec(id, h)?;
    let scene_json = serde_json::to_string_pretty(&spec).map_err(Error::from)?;
    let scene = Scene::from_spec(spec, None)?;
    let s = solve(scene)?;
    let scene = &s.scene;
    let h = scene.h;
    let n_tests = scene.tol.n_tests;
    let mut checks = Vec::new();
    let oracle = match id {
        "disk" => {
            let u = s.u_phi();
            checks.push(holds("visibility_holds", s.h5.pass));
            checks.push(at_most("u_phi_sup_error", sup_error(scene, &u, disk_u, |_| true), 2.0 * h));
            if let Some(cert) = &s.cert {
                let tf = transport_fields(scene, &s.rays, cert);
                checks.push(at_most("v_f_l1_error", l1_error(scene, &tf.v, disk_v), 5.0 * h));
                let pair = SolutionPair::new(scene, u.clone(), tf.v)?;
                checks.push(holds("pair_verifies", verify_solution(scene, &pair, &s.sets, n_tests, seed).pass));
            }
            checks.push(holds("unique", uniqueness_predicate(scene, &s.rays, &scene.source).unique));
            if let Some(uf) = minimal_profile(scene, &u, &scene.source).field() {
                checks.push(at_most("u_f_sup_gap", uf.max_abs_diff(&u, |k| scene.active[k]), scene.tol.c * h));
            }
            oracle_csv(scene, disk_u, Some(&disk_v))
        }
        "rect" => {
            let u = s.u_phi();
            checks.push(holds("visibility_holds", s.h5.pass));
            checks.push(at_most("u_phi_sup_error", sup_error(scene, &u, |x| x.y, |_| true), 2.0 * h));
            checks.push(holds("separation_holds", s.h6.pass));
            if let Some(cert) = &s.cert {
                let tf = transport_fields(scene, &s.rays, cert);
                checks.push(at_most("v_f_l1_error", l1_error(scene, &tf.v, |x| 1.0 - x.y), 5.0 * h));
            }
            oracle_csv(scene, |x| x.y, Some(&|x: Vec2| 1.0 - x.y))
        }
        "ex1" => {
            checks.push(holds("visibility_fails", !s.h5.pass));
            let leaves = s.h5.witnesses.iter().any(|w| {
                let (x, y) = (Vec2::new(w.x[0], w.x[1]), Vec2::new(w.y[0], w.y[1]));
                (1..1000).any(|i| !scene.boundary.winds_around(y + (x - y) * (f64::from(i) / 1000.0)))
            });
            checks.push(holds("witness_segment_leaves", leaves));
            checks.push(at_most("geodesic_sup_error", sup_error(scene, &s.lh.geodesic, ex1_u, |_| true), 4.0 * h));
            oracle_csv(scene, ex1_u, None)
        }
        "ex2" => {
            checks.push(holds("visibility_fails", !s.h5.pass));
            checks.push(at_most("geodesic_sup_error", sup_error(scene, &s.lh.geodesic, ex2_u, |_| true), 4.0 * h));
            // rays of the lower sector all end at the corner
            let sets = sets_from(scene, ex2_exit_set, |p| p.norm() < 1e-9);
            let u = field(scene, ex2_u);
            for (name, c) in [("flat", c_flat as fn(f64) -> f64), ("ramp", c_ramp)] {
                let v = field(scene, |x| ex2_v(x) + sector_w(x, c));
                let pair = SolutionPair::new(scene, u.clone(), v)?;
                let rep = verify_solution(scene, &pair, &sets, n_tests, seed);
                checks.push(holds(&format!("closed_form_pair_{name}_verifies"), rep.pass));
            }
            oracle_csv(scene, ex2_u, Some(&|x: Vec2| ex2_v(x) + sector_w(x, c_flat)))
        }
        "ex3" => {
            let u = s.u_phi();
            let shrunk = |x: Vec2| ex3_branch(x, 2.0 * h).is_some();
            checks.push(at_most("u_phi_sup_error", sup_error(scene, &u, ex3_u, shrunk), 4.0 * h));
            let gap = sample_spacing(scene);
            checks.push(holds("initial_points_match", same_samples(scene, &s.sets.gamma_phi, ex3_exit_set, gap)));
            checks.push(holds("active_initial_points_match", same_samples(scene, &s.sets.gamma_f, ex3_exit_set, gap)));
            checks.push(holds("visibility_holds", s.h5.pass));
            checks.push(holds("separation_fails", !s.h6.pass));
            let near_origin = s.h6.closest.map_or(f64::INFINITY, |c| Vec2::new(c[0][0], c[0][1]).norm());
            checks.push(at_most("separation_gap_at_origin", near_origin, 4.0 * h));
            if let Some(cert) = &s.cert {
                let tf = transport_fields(scene, &s.rays, cert);
                let pair = SolutionPair::new(scene, u.clone(), tf.v.clone())?;
                checks.push(holds("pair_verifies", verify_solution(scene, &pair, &s.sets, n_tests, seed).pass));
                let mut vw = tf.v.clone();
                for k in 0..vw.values.len() {
                    if scene.active[k] {
                        vw.values[k] += sector_w(scene.grid.point_of(k), c_flat);
                    }
                }
                let pair = SolutionPair::new(scene, u.clone(), vw)?;
                checks.push(holds("sector_pair_verifies", verify_solution(scene, &pair, &s.sets, n_tests, seed).pass));
            }
            oracle_csv(scene, ex3_u, None)
        }
        _ => unreachable!("fixture ids are checked above"),
    };
    Ok(ExampleRun { scene_json, oracle_csv: oracle, solved: s, checks })
}

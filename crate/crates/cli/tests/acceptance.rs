//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sandflow_cli::examples::{l1_error, run_example, sup_error};
use sandflow_cli::pipeline::{solve, Solved};
use sandflow_cli::{run, Args, EXIT_HYPOTHESIS};
use sandflow_core::fixtures::{c_flat, c_ramp, disk_u, disk_v, ex1_u, ex2_u, ex3_branch, ex3_u, fixture, fixture_spec};
use sandflow_core::geometry::Source;
use sandflow_core::transport::{build_slices, minimal_profile, transport_fields};
use sandflow_core::verify::{stability_batch, uniqueness_predicate, verify_solution, SolutionPair};
use sandflow_core::{Gauge, GaugeKind, Vec2};

/// Writes past the test harness's output capture so the lines show up in
/// ordinary `cargo test` output.
macro_rules! say {
    ($($t:tt)*) => {
        let _ = writeln!(std::io::stderr().lock(), $($t)*);
    };
}

struct Criterion {
    id: u32,
    pass: bool,
    detail: String,
}

fn solved(id: &str, n: f64) -> Solved {
    solve(fixture(id, 1.0 / n).unwrap()).unwrap()
}

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 2000;
    let dt = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * dt)).sum::<f64>() * dt
}

fn disk_open_table() -> Criterion {
    let t = Instant::now();
    let s = solved("disk", 128.0);
    let h = s.scene.h;
    let u = s.u_phi();
    let cert = s.cert.as_ref().unwrap();
    let tf = transport_fields(&s.scene, &s.rays, cert);
    let elapsed = t.elapsed();
    let eu = sup_error(&s.scene, &u, disk_u, |_| true);
    let ev = l1_error(&s.scene, &tf.v, disk_v);
    Criterion {
        id: 1,
        pass: eu <= 2.0 * h && ev <= 5.0 * h && elapsed <= Duration::from_secs(30),
        detail: format!(
            "sup|u-(1-|x|)| {eu:.3e} <= {:.3e}, L1|v-|x|/2| {ev:.3e} <= {:.3e}, {elapsed:.1?}",
            2.0 * h,
            5.0 * h
        ),
    }
}

fn script(fixture: &str) -> (bool, String) {
    let run = run_example(fixture, 1.0 / 128.0, 0).unwrap();
    let failed: Vec<&str> = run.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    (failed.is_empty(), format!("{} scripted checks, failed {failed:?}", run.checks.len()))
}

fn third_example() -> Criterion {
    let (pass, detail) = script("ex3");
    Criterion { id: 2, pass, detail }
}

fn first_example() -> Criterion {
    let (pass, detail) = script("ex1");
    let dir = tempfile::TempDir::new().unwrap();
    let spec = fixture_spec("ex1", 1.0 / 128.0).unwrap();
    let scene = dir.path().join("scene.json");
    std::fs::write(&scene, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = dir.path().join("out");
    let args =
        Args::try_parse_from(["sandflow", "solve", scene.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap();
    let code = run(&args);
    Criterion { id: 3, pass: pass && code == EXIT_HYPOTHESIS, detail: format!("{detail}, solve exit {code}") }
}

fn second_example() -> Criterion {
    let (pass, detail) = script("ex2");
    let (a, b) = (-FRAC_PI_2, -FRAC_PI_4);
    let (i1, i2) = (quad(c_flat, a, b), quad(c_ramp, a, b));
    let distinct = quad(|t| (c_flat(t) - c_ramp(t)).abs(), a, b) > 1e-3;
    let integrals = (i1 - PI / 8.0).abs() < 1e-6 && (i2 - PI / 8.0).abs() < 1e-6;
    Criterion {
        id: 4,
        pass: pass && distinct && integrals,
        detail: format!("{detail}, integrals of c: {i1:.6} {i2:.6} (pi/8 = {:.6})", PI / 8.0),
    }
}

fn uniqueness_dichotomy(s: &Solved) -> Criterion {
    let scene = &s.scene;
    let h = scene.h;
    let u = s.u_phi();
    let uniq = uniqueness_predicate(scene, &s.rays, &scene.source);
    let gap = minimal_profile(scene, &u, &scene.source).field().unwrap().max_abs_diff(&u, |k| scene.active[k]);
    let annulus = Source::Annulus { center: Vec2::zeros(), inner: 0.5, outer: 0.75, amplitude: 1.0 };
    let sa = scene.with_source(annulus.clone());
    let un = uniqueness_predicate(&sa, &s.rays, &annulus);
    let near = un.uncovered.iter().map(|q| Vec2::new(q[0], q[1]).norm()).fold(f64::INFINITY, f64::min);
    let uf = minimal_profile(&sa, &u, &annulus);
    let k0 = scene.grid.nearest(Vec2::zeros()).unwrap();
    let drop = u.values[k0] - uf.field().unwrap().values[k0];
    let c = scene.tol.c;
    Criterion {
        id: 5,
        pass: uniq.unique && gap <= c * h && !un.unique && near <= 2.0 * h && (drop - 1.0).abs() <= c * h,
        detail: format!(
            "f=1: unique {} gap {gap:.3e}; annulus: unique {} nearest uncovered {near:.3e}, u_phi(0)-u_f(0) {drop:.4}",
            uniq.unique, un.unique
        ),
    }
}

fn smooth_source(rng: &mut ChaCha8Rng) -> Source {
    let bump = |rng: &mut ChaCha8Rng| Source::Gaussian {
        center: Vec2::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)),
        sigma: rng.gen_range(0.1..0.5),
        amplitude: rng.gen_range(0.0..2.0),
    };
    Source::Sum(vec![Source::Constant(rng.gen_range(0.0..1.0)), bump(rng), bump(rng)])
}

fn stability(s: &Solved) -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pairs: Vec<(Source, Source)> = (0..20).map(|_| (smooth_source(&mut rng), smooth_source(&mut rng))).collect();
    let reps = stability_batch(&s.scene, &s.rays, &pairs, s.cert.as_ref().unwrap());
    let violations = reps.iter().filter(|r| !r.pass).count();
    let worst = reps.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    Criterion {
        id: 6,
        pass: violations == 0,
        detail: format!("20 pairs, {violations} violations, largest lhs/rhs {worst:.3}"),
    }
}

/// Discretization errors whose bounds scale with `h`.
struct Measured {
    name: &'static str,
    value: f64,
    bound: f64,
}

fn measure(n: f64) -> (Vec<Measured>, bool) {
    let mut out = Vec::new();
    let disk = solved("disk", n);
    let scene = &disk.scene;
    let h = scene.h;
    let c = scene.tol.c;
    let u = disk.u_phi();
    let cert = disk.cert.as_ref().unwrap();
    let tf = transport_fields(scene, &disk.rays, cert);
    out.push(Measured { name: "disk u_phi sup error", value: sup_error(scene, &u, disk_u, |_| true), bound: 2.0 * h });
    out.push(Measured { name: "disk v_f L1 error", value: l1_error(scene, &tf.v, disk_v), bound: 5.0 * h });
    let uf = minimal_profile(scene, &u, &scene.source);
    out.push(Measured {
        name: "disk u_f gap",
        value: uf.field().unwrap().max_abs_diff(&u, |k| scene.active[k]),
        bound: c * h,
    });
    let slices = build_slices(scene, &disk.rays, cert);
    out.push(Measured {
        name: "disk slice area error",
        value: (slices.area(scene) / scene.area() - 1.0).abs(),
        bound: c * h,
    });
    out.push(Measured { name: "disk slice uncovered fraction", value: 1.0 - slices.coverage(scene), bound: c * h });
    let pair = SolutionPair::new(scene, u.clone(), tf.v.clone()).unwrap();
    let rep = verify_solution(scene, &pair, &disk.sets, scene.tol.n_tests, 0);
    let mut pass = rep.pass && slices.rays_disjoint(scene);
    for ch in &rep.checks {
        if ch.name == "complementarity" {
            out.push(Measured { name: "disk complementarity", value: ch.value, bound: ch.bound });
        }
    }
    for id in ["ex1", "ex2"] {
        let s = solved(id, n);
        let f = if id == "ex1" { ex1_u } else { ex2_u };
        let name = if id == "ex1" { "ex1 geodesic error" } else { "ex2 geodesic error" };
        out.push(Measured { name, value: sup_error(&s.scene, &s.lh.geodesic, f, |_| true), bound: 4.0 * s.scene.h });
        pass &= !s.h5.pass;
    }
    let ex3 = solved("ex3", n);
    let shrunk = |x: Vec2| ex3_branch(x, 2.0 * h).is_some();
    out.push(Measured {
        name: "ex3 u_phi sup error",
        value: sup_error(&ex3.scene, &ex3.u_phi(), ex3_u, shrunk),
        bound: 4.0 * h,
    });
    pass &= ex3.h5.pass && !ex3.h6.pass;
    pass &= out.iter().all(|m| m.value <= m.bound);
    (out, pass)
}

fn gauge_suite() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kinds = [GaugeKind::Euclidean, GaugeKind::Ellipse { a: 2.0, b: 0.5 }, GaugeKind::Pnorm { p: 3.0 }];
    kinds.iter().all(|&k| {
        let g = Gauge::new(k).unwrap();
        (0..1000).all(|_| {
            let x = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let y = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let d = g.gradient(x).unwrap();
            g.value(x + y) <= g.value(x) + g.value(y) + 1e-9
                && (d.dot(&x) - g.value(x)).abs() <= 1e-8 * (1.0 + g.value(x))
                && (g.polar_value(d) - 1.0).abs() <= 1e-8
                && x.dot(&y) <= g.value(x) * g.polar_value(y) + 1e-9
        })
    })
}

/// A measured error counts as tightening when it shrinks by 1.5 or, at both
/// resolutions, is no larger than the gap between a unit arc and its 1 degree
/// polyline, which no grid refinement removes.
fn floor() -> f64 {
    1.01 * (1.0 - 0.5f64.to_radians().cos())
}

fn tightening() -> Criterion {
    let t = Instant::now();
    let gauges = gauge_suite();
    let (coarse, pass_c) = measure(128.0);
    let (fine, pass_f) = measure(256.0);
    let elapsed = t.elapsed();
    let mut notes = Vec::new();
    let mut shrinks = true;
    for (a, b) in coarse.iter().zip(&fine) {
        let ratio = a.value / b.value;
        let floor = a.value <= floor() && b.value <= floor();
        let ok = ratio >= 1.5 || floor;
        shrinks &= ok;
        say!(
            "    {:<30} {:.3e} -> {:.3e} (ratio {:.2}{}) bounds {:.3e} -> {:.3e}",
            a.name,
            a.value,
            b.value,
            ratio,
            if floor { ", at floor" } else { "" },
            a.bound,
            b.bound
        );
        if !ok {
            notes.push(a.name);
        }
    }
    Criterion {
        id: 7,
        pass: gauges && pass_c && pass_f && shrinks && elapsed <= Duration::from_secs(300),
        detail: format!(
            "gauge {gauges}, suites at 1/128 {pass_c} and 1/256 {pass_f}, not tightening {notes:?}, {elapsed:.1?}"
        ),
    }
}

fn disintegration(s: &Solved) -> Criterion {
    let slices = build_slices(&s.scene, &s.rays, s.cert.as_ref().unwrap());
    let coverage = slices.coverage(&s.scene);
    let area = slices.area(&s.scene);
    let rel = (area / s.scene.area() - 1.0).abs();
    Criterion {
        id: 8,
        pass: coverage >= 0.98 && rel <= 0.02,
        detail: format!("coverage {coverage:.4}, slice area {area:.4} vs {:.4} ({:.2}%)", s.scene.area(), 100.0 * rel),
    }
}

#[test]
fn acceptance() {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().unwrap();
    let mut results = vec![disk_open_table(), third_example(), first_example(), second_example()];
    let disk = solved("disk", 128.0);
    results.push(uniqueness_dichotomy(&disk));
    results.push(stability(&disk));
    results.push(tightening());
    results.push(disintegration(&disk));
    for c in &results {
        say!("criterion {}: {} {}", c.id, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    let failed: Vec<u32> = results.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}

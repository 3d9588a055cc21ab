use std::sync::OnceLock;

use proptest::prelude::*;
use sandflow_core::eikonal::{boundary_sets, lax_hopf, ray_field, BoundarySets, LaxHopf};
use sandflow_core::fixtures::{disk_u, disk_v, fixture};
use sandflow_core::geometry::{segment_distance, Scene};
use sandflow_core::grid::{read_csv, write_csv, Grid, ScalarField};
use sandflow_core::verify::{weak_residual, SolutionPair, TestFunction};
use sandflow_core::{Gauge, GaugeKind, Vec2};

fn gauges() -> impl Strategy<Value = Gauge> {
    prop_oneof![
        Just(GaugeKind::Euclidean),
        (0.3..3.0f64, 0.3..3.0f64).prop_map(|(a, b)| GaugeKind::Ellipse { a, b }),
        (1.2..6.0f64).prop_map(|p| GaugeKind::Pnorm { p }),
    ]
    .prop_map(|k| Gauge::new(k).unwrap())
}

fn vec2(r: f64) -> impl Strategy<Value = Vec2> {
    (-r..r, -r..r).prop_map(|(x, y)| Vec2::new(x, y))
}

fn nonzero() -> impl Strategy<Value = Vec2> {
    vec2(5.0).prop_filter("away from origin", |v| v.norm() > 1e-3)
}

proptest! {
    #[test]
    fn gauge_is_positively_homogeneous(g in gauges(), x in vec2(5.0), t in 0.0..10.0f64) {
        prop_assert!((g.value(x * t) - t * g.value(x)).abs() <= 1e-9 * (1.0 + t * g.value(x)));
        prop_assert!((g.polar_value(x * t) - t * g.polar_value(x)).abs() <= 1e-9 * (1.0 + t * g.polar_value(x)));
    }

    #[test]
    fn gauge_is_subadditive(g in gauges(), x in vec2(5.0), y in vec2(5.0)) {
        prop_assert!(g.value(x + y) <= g.value(x) + g.value(y) + 1e-9);
        prop_assert!(g.polar_value(x + y) <= g.polar_value(x) + g.polar_value(y) + 1e-9);
    }

    #[test]
    fn gradient_satisfies_euler_identity(g in gauges(), x in nonzero()) {
        let d = g.gradient(x).unwrap();
        prop_assert!((d.dot(&x) - g.value(x)).abs() <= 1e-8 * (1.0 + g.value(x)));
    }

    #[test]
    fn gradient_lies_on_polar_unit_sphere(g in gauges(), x in nonzero()) {
        let d = g.gradient(x).unwrap();
        prop_assert!((g.polar_value(d) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn polar_of_polar_is_the_gauge(g in gauges(), x in vec2(5.0)) {
        let pp = g.polar().polar();
        prop_assert!((pp.value(x) - g.value(x)).abs() <= 1e-9 * (1.0 + g.value(x)));
    }

    #[test]
    fn duality_inequality(g in gauges(), x in vec2(5.0), y in vec2(5.0)) {
        prop_assert!(x.dot(&y) <= g.value(x) * g.polar_value(y) + 1e-9);
    }

    #[test]
    fn segment_distance_is_symmetric(p in vec2(3.0), a in vec2(3.0), b in vec2(3.0)) {
        prop_assert!((segment_distance(p, a, b) - segment_distance(p, b, a)).abs() <= 1e-12);
        prop_assert!(segment_distance(p, a, b) <= (p - a).norm().min((p - b).norm()) + 1e-12);
    }

    #[test]
    fn csv_round_trip_is_exact(vals in prop::collection::vec(prop_oneof![Just(f64::NAN), -1e6..1e6f64], 12)) {
        let grid = Grid { origin: Vec2::new(-0.3, 0.7), h: 0.1, nx: 4, ny: 3 };
        let text = write_csv(&grid, &[("u", &vals)]);
        let table = read_csv(text.as_bytes()).unwrap();
        prop_assert!(table.grid.same_as(&grid));
        let back = table.column("u").unwrap();
        for (a, b) in vals.iter().zip(&back.values) {
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn bilinear_reproduces_affine_fields(c in vec2(2.0), s in -3.0..3.0f64, t in (0.0..1.0f64, 0.0..1.0f64)) {
        let grid = Grid { origin: Vec2::new(0.0, 0.0), h: 0.25, nx: 5, ny: 5 };
        let f = |p: Vec2| s + c.dot(&p);
        let field = ScalarField::from_fn(grid, &[true; 25], f);
        let p = Vec2::new(t.0, t.1);
        prop_assert!((field.bilinear(p).unwrap() - f(p)).abs() <= 1e-12);
    }
}

struct Disk {
    scene: Scene,
    lh: LaxHopf,
    sets: BoundarySets,
}

fn disk() -> &'static Disk {
    static DISK: OnceLock<Disk> = OnceLock::new();
    DISK.get_or_init(|| {
        let scene = fixture("disk", 1.0 / 32.0).unwrap();
        let lh = lax_hopf(&scene).unwrap();
        let rays = ray_field(&scene, &lh);
        let sets = boundary_sets(&scene, &lh, &rays);
        Disk { scene, lh, sets }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maximal_profile_is_one_lipschitz_in_the_gauge(i in 0usize..100_000, j in 0usize..100_000) {
        let d = disk();
        let active: Vec<usize> = (0..d.scene.grid.len()).filter(|&k| d.scene.active[k]).collect();
        let (a, b) = (active[i % active.len()], active[j % active.len()]);
        let (pa, pb) = (d.scene.grid.point_of(a), d.scene.grid.point_of(b));
        let u = d.lh.profile(true);
        // the disk is convex, so the straight segment is admissible
        prop_assert!(u.values[a] - u.values[b] <= d.scene.gauge.polar_value(pa - pb) + 2.0 * d.scene.h);
    }

    #[test]
    fn weak_residual_scales_with_amplitude(cx in -0.4..0.4f64, cy in -0.4..0.4f64, r in 0.15..0.4f64, k in 0.1..5.0f64) {
        let d = disk();
        let s = &d.scene;
        let c = Vec2::new(cx, cy);
        prop_assume!(c.norm() + r < 0.9);
        let u = ScalarField::from_fn(s.grid, &s.active, disk_u);
        let v = ScalarField::from_fn(s.grid, &s.active, |x| 2.0 * disk_v(x));
        let pair = SolutionPair::new(s, u, v).unwrap();
        let t1 = TestFunction::new(s, &d.sets, c, r, 1.0).unwrap();
        let tk = TestFunction::new(s, &d.sets, c, r, k).unwrap();
        let (r1, s1) = weak_residual(s, &pair, &t1);
        let (rk, sk) = weak_residual(s, &pair, &tk);
        prop_assert!((rk - k * r1).abs() <= 1e-9 * (1.0 + rk));
        prop_assert!((sk - k * s1).abs() <= 1e-9 * (1.0 + sk));
    }
}

//! Bundled scenes with known closed-form solutions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde_json::json;

use crate::error::{Error, Result};
use crate::gauge::Vec2;
use crate::geometry::{Scene, SceneSpec};

fn spec(value: serde_json::Value) -> SceneSpec {
    serde_json::from_value(value).expect("fixture spec is well formed")
}

/// Unit disk, `phi = 0`, `f = 1`.
pub fn disk_spec(h: f64) -> SceneSpec {
    spec(json!({
        "domain": {"vertices": [{"arc": {"center": [0, 0], "radius": 1, "from_deg": 0, "to_deg": 360}}],
                   "arc_resolution_deg": 1.0},
        "datum": {"pieces": [{"edges": [0, 359], "value": 0}]},
        "source": {"kind": "constant", "value": 1},
        "grid": {"h": h, "h_b": PI / 180.0}
    }))
}

/// `(-1,1) x (0,1)`, `phi = 0` on the bottom edge and walls elsewhere.
pub fn rectangle_spec(h: f64) -> SceneSpec {
    spec(json!({
        "domain": {"vertices": [[-1, 0], [1, 0], [1, 1], [-1, 1]]},
        "datum": {"pieces": [{"edges": [0, 0], "value": 0}, {"edges": [1, 3], "value": "wall"}]},
        "source": {"kind": "constant", "value": 1},
        "grid": {"h": h}
    }))
}

/// Strip plus quarter disk; only the bottom of the strip is open.
pub fn ex1_spec(h: f64) -> SceneSpec {
    spec(json!({
        "domain": {"vertices": [[-1, -1], [0, -1], [0, 0],
                   {"arc": {"center": [0, 0], "radius": 1, "from_deg": 0, "to_deg": 90}},
                   [-1, 1]]},
        "datum": {"pieces": [{"edges": [0, 0], "value": 0}, {"edges": [1, 94], "value": "wall"}]},
        "source": {"kind": "constant", "value": 1},
        "grid": {"h": h}
    }))
}

/// Strip plus two sectors; open on the strip bottom and the lower arc.
pub fn ex2_spec(h: f64) -> SceneSpec {
    spec(json!({
        "domain": {"vertices": [[-1, -1],
                   {"arc": {"center": [0, 0], "radius": 1, "from_deg": -90, "to_deg": -45}},
                   [0, 0],
                   {"arc": {"center": [0, 0], "radius": 1, "from_deg": 45, "to_deg": 90}},
                   [-1, 1]]},
        "datum": {"pieces": [{"edges": [0, 45], "value": 0}, {"edges": [46, 94], "value": "wall"}]},
        "source": {"kind": "constant", "value": 1},
        "grid": {"h": h}
    }))
}

/// Strip, square and sector with a continuous datum on the whole boundary.
pub fn ex3_spec(h: f64) -> SceneSpec {
    spec(json!({
        "domain": {"vertices": [[-1, -1],
                   {"arc": {"center": [0, 0], "radius": 1, "from_deg": -90, "to_deg": -45}},
                   [0, 0], [1, 0], [1, 1], [0, 1], [-1, 1]]},
        "datum": {"pieces": [
            {"edges": [0, 45], "value": 0},
            {"edges": [46, 46], "value": {"expr": "1 - math::sqrt(x^2 + y^2)"}},
            {"edges": [47, 48], "value": 1},
            {"edges": [49, 49], "value": {"expr": "x"}},
            {"edges": [50, 50], "value": 0},
            {"edges": [51, 51], "value": {"expr": "1 - math::abs(y)"}}
        ]},
        "source": {"kind": "constant", "value": 1},
        "grid": {"h": h}
    }))
}

pub const FIXTURES: [&str; 5] = ["disk", "ex1", "ex2", "ex3", "rect"];

pub fn fixture_spec(id: &str, h: f64) -> Result<SceneSpec> {
    match id {
        "disk" => Ok(disk_spec(h)),
        "ex1" => Ok(ex1_spec(h)),
        "ex2" => Ok(ex2_spec(h)),
        "ex3" => Ok(ex3_spec(h)),
        "rect" => Ok(rectangle_spec(h)),
        _ => Err(Error::Config(format!("unknown fixture `{id}`, expected one of {FIXTURES:?}"))),
    }
}

pub fn fixture(id: &str, h: f64) -> Result<Scene> {
    Scene::from_spec(fixture_spec(id, h)?, None)
}

pub fn disk_u(x: Vec2) -> f64 {
    1.0 - x.norm()
}

pub fn disk_v(x: Vec2) -> f64 {
    x.norm() / 2.0
}

pub fn ex1_u(x: Vec2) -> f64 {
    if x.x > 0.0 {
        1.0 + x.norm()
    } else {
        1.0 + x.y
    }
}

/// Which of the three pieces of the second example contains `x`.
pub fn ex2_piece(x: Vec2) -> u8 {
    if x.x < 0.0 {
        1
    } else if x.y > 0.0 {
        2
    } else {
        3
    }
}

pub fn ex2_u(x: Vec2) -> f64 {
    match ex2_piece(x) {
        1 => 1.0 + x.y,
        2 => 1.0 + x.norm(),
        _ => 1.0 - x.norm(),
    }
}

/// Density obtained by integrating the source forward along the rays. On the
/// strip the rays run upward into the top wall, so the density is `1 - x2`.
pub fn ex2_v(x: Vec2) -> f64 {
    let r = x.norm();
    match ex2_piece(x) {
        1 => 1.0 - x.y,
        2 => (1.0 - r * r) / (2.0 * r),
        _ => r / 2.0,
    }
}

/// `c(theta) / r` on the lower sector, zero elsewhere.
pub fn sector_w(x: Vec2, c: impl Fn(f64) -> f64) -> f64 {
    let th = x.y.atan2(x.x);
    let r = x.norm();
    if x.x >= 0.0 && x.y < 0.0 && th <= -FRAC_PI_4 && r > 0.0 && r < 1.0 {
        c(th) / r
    } else {
        0.0
    }
}

/// Constant profile on `(-pi/2, -pi/4)` with integral `pi/8`.
pub fn c_flat(_th: f64) -> f64 {
    0.5
}

/// Linear profile on `(-pi/2, -pi/4)` with integral `pi/8`.
pub fn c_ramp(th: f64) -> f64 {
    4.0 * (th + FRAC_PI_2) / PI
}

/// Branches of the third example's envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ex3Branch {
    Strip,
    Sector,
    Bottom,
    Right,
    Fan,
}

fn ex3_square_branches(x: Vec2) -> [(Ex3Branch, f64); 3] {
    [(Ex3Branch::Bottom, 1.0 + x.y), (Ex3Branch::Right, 2.0 - x.x), (Ex3Branch::Fan, x.x.hypot(1.0 - x.y))]
}

pub fn ex3_u(x: Vec2) -> f64 {
    if x.x <= 0.0 {
        1.0 - x.y.abs()
    } else if x.y < 0.0 {
        1.0 - x.norm()
    } else {
        ex3_square_branches(x).iter().map(|b| b.1).fold(f64::INFINITY, f64::min)
    }
}

/// Branch containing `x` at distance at least `m` from every branch
/// interface and from the boundary.
pub fn ex3_branch(x: Vec2, m: f64) -> Option<Ex3Branch> {
    let (x1, x2) = (x.x, x.y);
    if x1 > -1.0 + m && x1 < -m && x2 > -1.0 + m && x2 < 1.0 - m {
        return Some(Ex3Branch::Strip);
    }
    let r = x.norm();
    let th = x2.atan2(x1);
    if x1 > 0.0 && x2 < 0.0 {
        let to_edges = (r * (th + FRAC_PI_2).sin()).min(r * (-FRAC_PI_4 - th).sin());
        if r < 1.0 - m && th > -FRAC_PI_2 && th < -FRAC_PI_4 && to_edges > m {
            return Some(Ex3Branch::Sector);
        }
        return None;
    }
    if !(x1 > m && x1 < 1.0 - m && x2 > m && x2 < 1.0 - m) {
        return None;
    }
    // branch differences are 2-Lipschitz, so a gap of 2m keeps m away
    let mut b = ex3_square_branches(x);
    b.sort_by(|p, q| p.1.total_cmp(&q.1));
    if b[1].1 - b[0].1 > 2.0 * m {
        Some(b[0].0)
    } else {
        None
    }
}

/// Open boundary pieces `S1` and `S2` of the third example.
pub fn ex3_exit_set(p: Vec2) -> bool {
    let e = 1e-9;
    let s1_lines = p.x > -1.0 - e && p.x <= e && ((p.y + 1.0).abs() < e || (p.y - 1.0).abs() < e);
    let th = p.y.atan2(p.x);
    let s1_arc = (p.norm() - 1.0).abs() < 1e-3 && th >= -FRAC_PI_2 - e && th <= -FRAC_PI_4 + e;
    let s2 = (p.y.abs() < e && p.x > -e && p.x < 1.0 + e) || ((p.x - 1.0).abs() < e && p.y > -e && p.y < 1.0 + e);
    s1_lines || s1_arc || s2
}

/// Open boundary pieces `S1` and `S3` of the second example.
pub fn ex2_exit_set(p: Vec2) -> bool {
    let e = 1e-9;
    let s1 = (p.y + 1.0).abs() < e && p.x > -1.0 - e && p.x < e;
    let th = p.y.atan2(p.x);
    let s3 = (p.norm() - 1.0).abs() < 1e-3 && th >= -FRAC_PI_2 - e && th <= -FRAC_PI_4 + e;
    s1 || s3
}

//! Solved fixtures shared by unit tests.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::eikonal::{boundary_sets, lax_hopf, ray_field, BoundarySets, LaxHopf, RayField};
use crate::fixtures::fixture;
use crate::geometry::Scene;
use crate::verify::{check_h5, H5Certificate};

pub struct Solved {
    pub scene: Scene,
    pub lh: LaxHopf,
    pub rays: RayField,
    pub sets: BoundarySets,
    pub cert: Option<H5Certificate>,
}

impl Solved {
    pub fn cert(&self) -> &H5Certificate {
        self.cert.as_ref().expect("fixture satisfies the visibility hypothesis")
    }
}

/// Fixture `id` at `h = 1/n`, solved once per test binary.
pub fn solved(id: &'static str, n: u32) -> &'static Solved {
    static CACHE: OnceLock<Mutex<HashMap<(&'static str, u32), &'static Solved>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry((id, n)).or_insert_with(|| {
        let scene = fixture(id, 1.0 / n as f64).unwrap();
        let lh = lax_hopf(&scene).unwrap();
        let rays = ray_field(&scene, &lh);
        let sets = boundary_sets(&scene, &lh, &rays);
        let cert = check_h5(&scene, &lh).1;
        Box::leak(Box::new(Solved { scene, lh, rays, sets, cert }))
    })
}

//! Scene loading and the solver chain shared by the commands.

use std::fs;
use std::path::Path;

use sandflow_core::eikonal::{boundary_sets, lax_hopf, ray_field, BoundarySets, LaxHopf, RayField};
use sandflow_core::geometry::Scene;
use sandflow_core::grid::{write_csv, ScalarField};
use sandflow_core::transport::TransportFields;
use sandflow_core::verify::{check_h5, check_h6, H5Certificate, H5Report, H6Report};
use sandflow_core::Result;

use crate::{Args, Failure};

/// Envelope, rays, boundary sets and hypothesis checks of one scene.
pub struct Solved {
    pub scene: Scene,
    pub lh: LaxHopf,
    pub rays: RayField,
    pub sets: BoundarySets,
    pub h5: H5Report,
    pub cert: Option<H5Certificate>,
    pub h6: H6Report,
}

impl Solved {
    /// The authoritative maximal profile: direct when visibility holds.
    pub fn u_phi(&self) -> ScalarField {
        self.lh.profile(self.cert.is_some())
    }
}

pub fn solve(scene: Scene) -> Result<Solved> {
    let lh = lax_hopf(&scene)?;
    let rays = ray_field(&scene, &lh);
    let sets = boundary_sets(&scene, &lh, &rays);
    let (h5, cert) = check_h5(&scene, &lh);
    let h6 = check_h6(&scene, &sets);
    Ok(Solved { scene, lh, rays, sets, h5, cert, h6 })
}

/// Scene from `--scene` or the positional argument, with `--h` and `--tol`
/// applied.
pub fn load_scene(args: &Args) -> std::result::Result<Scene, Failure> {
    let path = match (&args.scene, &args.target) {
        (Some(p), _) => p.clone(),
        (None, Some(t)) => t.into(),
        (None, None) => return Err(Failure::config("no scene given (use --scene PATH)")),
    };
    if !path.exists() {
        return Err(Failure::config(format!("scene file {} does not exist", path.display())));
    }
    let scene = Scene::load(&path)?;
    adjust(scene, args)
}

pub fn adjust(mut scene: Scene, args: &Args) -> std::result::Result<Scene, Failure> {
    if let Some(h) = args.h {
        scene = scene.with_h(h)?;
    }
    if !args.tol.is_empty() {
        let mut tol = scene.tol;
        for kv in &args.tol {
            let (k, v) = kv.split_once('=').ok_or_else(|| Failure::config(format!("expected KEY=VAL, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Failure::config(format!("bad tolerance value in `{kv}`")))?;
            tol.set(k.trim(), v)?;
        }
        scene = scene.with_tolerances(tol);
    }
    Ok(scene)
}

/// `fields.csv` columns; missing fields are written as `nan`.
pub fn fields_csv(s: &Solved, u_phi: &ScalarField, u_f: Option<&ScalarField>, tf: Option<&TransportFields>) -> String {
    let grid = s.scene.grid;
    let n = grid.len();
    let unset = vec![f64::NAN; n];
    let mut cols: Vec<Vec<f64>> = vec![vec![f64::NAN; n]; 6];
    for k in 0..n {
        if !s.scene.active[k] {
            continue;
        }
        if let Some(r) = s.rays.rays[k] {
            cols[0][k] = r.d.x;
            cols[1][k] = r.d.y;
            cols[2][k] = r.a;
            cols[3][k] = r.b;
        }
        cols[4][k] = match s.rays.rays[k] {
            Some(r) if r.ridge => 1.0,
            Some(_) => 0.0,
            None => f64::NAN,
        };
    }
    let active = |f: &ScalarField| -> Vec<f64> {
        (0..n).map(|k| if s.scene.active[k] { f.values[k] } else { f64::NAN }).collect()
    };
    let u = active(u_phi);
    let uf = u_f.map(active).unwrap_or_else(|| unset.clone());
    let v = tf.map(|t| active(&t.v)).unwrap_or_else(|| unset.clone());
    let al = tf.map(|t| active(&t.alpha_end)).unwrap_or_else(|| unset.clone());
    write_csv(
        &grid,
        &[
            ("u_phi", &u),
            ("u_f", &uf),
            ("v_f", &v),
            ("d1", &cols[0]),
            ("d2", &cols[1]),
            ("a", &cols[2]),
            ("b", &cols[3]),
            ("ridge_flag", &cols[4]),
            ("alpha_end", &al),
        ],
    )
}

pub fn write_out(dir: &Path, name: &str, text: &str) -> std::result::Result<(), Failure> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

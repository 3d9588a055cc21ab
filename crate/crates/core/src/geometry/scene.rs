use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datum::{datum_lipschitz, sample_boundary, BoundaryDatum, BoundarySample, DatumPiece, DatumPieceSpec};
use super::polygon::Boundary;
use super::source::{Source, SourceSpec};
use crate::error::{Error, Result};
use crate::gauge::{Gauge, GaugeKind, Vec2};
use crate::grid::{read_csv, Grid, ScalarField};

/// Numerical thresholds. Entries named `*_h` are multiples of the grid
/// spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Projection band is `proj_h * h * (Lip + 1)`.
    pub proj_h: f64,
    /// Direction-set diameter above which a cell is a ridge cell.
    pub ridge: f64,
    /// Linear growth tolerance along rays.
    pub ray_h: f64,
    /// Stop criterion used when marching a ray.
    pub march_h: f64,
    /// Direct and geodesic profiles must agree this closely for (H5).
    pub h5_agree_h: f64,
    /// Separation required between ray endpoints and exit points.
    pub h6_h: f64,
    /// Endpoint to support distance for the uniqueness predicate.
    pub j_h: f64,
    /// Generic first-order constant `C`.
    pub c: f64,
    /// Relative weak residual threshold.
    pub weak: f64,
    pub n_tests: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            proj_h: 2.0,
            ridge: 0.2,
            ray_h: 4.0,
            march_h: 0.5,
            h5_agree_h: 4.0,
            h6_h: 4.0,
            j_h: 2.0,
            c: 8.0,
            weak: 0.05,
            n_tests: 32,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "proj_h" => &mut self.proj_h,
            "ridge" => &mut self.ridge,
            "ray_h" => &mut self.ray_h,
            "march_h" => &mut self.march_h,
            "h5_agree_h" => &mut self.h5_agree_h,
            "h6_h" => &mut self.h6_h,
            "j_h" => &mut self.j_h,
            "c" => &mut self.c,
            "weak" => &mut self.weak,
            "n_tests" => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("n_tests must be a positive integer, got {value}")));
                }
                self.n_tests = value as usize;
                return Ok(());
            }
            _ => return Err(Error::Config(format!("unknown tolerance `{key}`"))),
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!("tolerance {key} must be positive, got {value}")));
        }
        *slot = value;
        Ok(())
    }
}

/// Circular arc entry of a vertex list, in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub from_deg: f64,
    pub to_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexSpec {
    Point([f64; 2]),
    Arc { arc: ArcSpec },
}

fn default_arc_resolution() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub vertices: Vec<VertexSpec>,
    #[serde(default = "default_arc_resolution")]
    pub arc_resolution_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatumSpec {
    pub pieces: Vec<DatumPieceSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    pub h_b: Option<f64>,
}

/// Scene configuration file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    pub domain: DomainSpec,
    pub datum: DatumSpec,
    pub source: SourceSpec,
    #[serde(default)]
    pub gauge: GaugeKind,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Compiles a source spec; grid paths are relative to `base`.
pub fn compile_source(spec: &SourceSpec, base: Option<&Path>) -> Result<Source> {
    let load = |path: &str| -> Result<ScalarField> {
        let full = match base {
            Some(b) => b.join(path),
            None => Path::new(path).to_path_buf(),
        };
        let file = std::fs::File::open(&full)
            .map_err(|e| Error::Config(format!("cannot open source grid {}: {e}", full.display())))?;
        read_csv(file)?.first_column()
    };
    Source::from_spec(spec, &load)
}

/// Unit vector at `deg` degrees, exact at multiples of 90.
pub fn unit_at_deg(deg: f64) -> Vec2 {
    let q = deg / 90.0;
    if q.fract() == 0.0 {
        match (q as i64).rem_euclid(4) {
            0 => Vec2::new(1.0, 0.0),
            1 => Vec2::new(0.0, 1.0),
            2 => Vec2::new(-1.0, 0.0),
            _ => Vec2::new(0.0, -1.0),
        }
    } else {
        let r = deg.to_radians();
        Vec2::new(r.cos(), r.sin())
    }
}

impl DomainSpec {
    /// Expands arcs into polyline vertices.
    pub fn polyline(&self) -> Result<Vec<Vec2>> {
        let res = self.arc_resolution_deg;
        if !(res > 0.0 && res.is_finite()) {
            return Err(Error::Config(format!("arc resolution must be positive, got {res}")));
        }
        let mut out: Vec<Vec2> = Vec::new();
        let push = |p: Vec2, out: &mut Vec<Vec2>| {
            if out.last().is_none_or(|q| (q - p).norm() > 1e-12) {
                out.push(p);
            }
        };
        for v in &self.vertices {
            match v {
                VertexSpec::Point(p) => push(Vec2::new(p[0], p[1]), &mut out),
                VertexSpec::Arc { arc } => {
                    if !(arc.radius > 0.0) {
                        return Err(Error::Config(format!("arc radius must be positive, got {}", arc.radius)));
                    }
                    let span = arc.to_deg - arc.from_deg;
                    let n = ((span.abs() / res) - 1e-9).ceil().max(1.0) as usize;
                    let c = Vec2::new(arc.center[0], arc.center[1]);
                    for k in 0..=n {
                        let deg = arc.from_deg + span * k as f64 / n as f64;
                        push(c + unit_at_deg(deg) * arc.radius, &mut out);
                    }
                }
            }
        }
        while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= 1e-12 {
            out.pop();
        }
        Ok(out)
    }
}

/// Where a point sits relative to the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

/// A loaded problem instance with its discretization.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub boundary: Boundary,
    pub datum: BoundaryDatum,
    pub source: Source,
    pub gauge: Gauge,
    pub h: f64,
    pub h_b: f64,
    pub tol: Tolerances,
    pub grid: Grid,
    pub samples: Vec<BoundarySample>,
    /// Slope bound of the datum on its finite pieces.
    pub lip: f64,
    /// Nodes strictly inside the domain.
    pub active: Vec<bool>,
    /// Distance from each node to the boundary.
    pub dist: Vec<f64>,
}

impl Scene {
    /// Builds a scene; grid sources are read relative to `base`.
    pub fn from_spec(spec: SceneSpec, base: Option<&Path>) -> Result<Scene> {
        let verts = spec.domain.polyline()?;
        let boundary = Boundary::new(verts)?;
        let pieces = spec
            .datum
            .pieces
            .iter()
            .map(|p| Ok(DatumPiece { first: p.edges[0], last: p.edges[1], value: p.value.compile()? }))
            .collect::<Result<Vec<_>>>()?;
        let datum = BoundaryDatum::new(pieces, boundary.len())?;
        let source = compile_source(&spec.source, base)?;
        let gauge = Gauge::new(spec.gauge)?;
        let h = spec.grid.h;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("grid.h must be positive, got {h}")));
        }
        let h_b = spec.grid.h_b.unwrap_or(h / 2.0);
        if !(h_b > 0.0 && h_b.is_finite()) {
            return Err(Error::Config(format!("grid.h_b must be positive, got {h_b}")));
        }
        let samples = sample_boundary(&boundary, &datum, h_b)?;
        let lip = datum_lipschitz(&samples, &datum);
        let (lo, hi) = boundary.bbox();
        let grid = Grid::covering(lo, hi, h);
        let dist: Vec<f64> = (0..grid.len()).into_par_iter().map(|k| boundary.distance(grid.point_of(k))).collect();
        let eps = 1e-9 * (hi - lo).norm();
        let active =
            (0..grid.len()).into_par_iter().map(|k| dist[k] > eps && boundary.winds_around(grid.point_of(k))).collect();
        let tol = spec.tolerances;
        Ok(Scene { spec, boundary, datum, source, gauge, h, h_b, tol, grid, samples, lip, active, dist })
    }

    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Scene> {
        let spec: SceneSpec = serde_json::from_str(text)?;
        Scene::from_spec(spec, base)
    }

    pub fn load(path: &Path) -> Result<Scene> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Scene::from_json(&text, path.parent())
    }

    /// Same scene at another grid spacing; `h_b` keeps its ratio to `h`
    /// unless it was given explicitly.
    pub fn with_h(&self, h: f64) -> Result<Scene> {
        let mut spec = self.spec.clone();
        spec.grid.h = h;
        let original = std::mem::replace(&mut spec.source, SourceSpec::Constant { value: 0.0 });
        let mut s = Scene::from_spec(spec, None)?;
        s.spec.source = original;
        s.source = self.source.clone();
        s.tol = self.tol;
        Ok(s)
    }

    /// Same geometry and discretization with a different source.
    pub fn with_source(&self, source: Source) -> Scene {
        Scene { source, ..self.clone() }
    }

    pub fn with_tolerances(&self, tol: Tolerances) -> Scene {
        let mut s = self.clone();
        s.tol = tol;
        s.spec.tolerances = tol;
        s
    }

    pub fn contains(&self, x: Vec2) -> Location {
        if self.boundary.distance(x) <= self.h_b / 2.0 {
            Location::Boundary
        } else if self.boundary.winds_around(x) {
            Location::Interior
        } else {
            Location::Exterior
        }
    }

    pub fn open_segment_in_domain(&self, y: Vec2, x: Vec2) -> bool {
        self.boundary.open_segment_inside(y, x)
    }

    /// Sampled source on active nodes.
    pub fn source_field(&self) -> ScalarField {
        ScalarField::from_fn(self.grid, &self.active, |p| self.source.value(p))
    }

    pub fn area(&self) -> f64 {
        self.boundary.signed_area()
    }

    pub fn diameter(&self) -> f64 {
        self.boundary.diameter()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{
        "domain": {"vertices": [[0,0],[1,0],[1,1],[0,1]]},
        "datum": {"pieces": [{"edges":[0,3],"value":0}]},
        "source": {"kind":"constant","value":1},
        "grid": {"h": 0.125, "h_b": 0.01}
    }"#;

    #[test]
    fn classification() {
        let s = Scene::from_json(SQUARE, None).unwrap();
        assert_eq!(s.contains(Vec2::new(0.5, 0.5)), Location::Interior);
        assert_eq!(s.contains(Vec2::new(2.0, 2.0)), Location::Exterior);
        assert_eq!(s.contains(Vec2::new(1.0, 0.5)), Location::Boundary);
        assert_eq!(s.grid.nx, 9);
        assert_eq!(s.n_active(), 49);
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.set("weak", 0.1).unwrap();
        assert_eq!(t.weak, 0.1);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("ray_h", -1.0).is_err());
        t.set("n_tests", 7.0).unwrap();
        assert_eq!(t.n_tests, 7);
        let spec: SceneSpec =
            serde_json::from_str(&SQUARE.replace("\"grid\"", "\"tolerances\": {\"ridge\": 0.3}, \"grid\"")).unwrap();
        assert_eq!(spec.tolerances.ridge, 0.3);
        assert_eq!(spec.tolerances.ray_h, 4.0);
    }

    #[test]
    fn arcs_expand_at_resolution() {
        let d: DomainSpec =
            serde_json::from_str(r#"{"vertices":[{"arc":{"center":[0,0],"radius":1,"from_deg":0,"to_deg":360}}]}"#)
                .unwrap();
        let p = d.polyline().unwrap();
        assert_eq!(p.len(), 360);
        assert_eq!(p[90], Vec2::new(0.0, 1.0));
        assert_eq!(p[180], Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn all_wall_is_rejected() {
        let text = SQUARE.replace("\"value\":0}", "\"value\":\"wall\"}");
        assert!(matches!(Scene::from_json(&text, None), Err(Error::AllWall)));
    }
}

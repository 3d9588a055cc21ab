use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::Vec2;
use crate::grid::ScalarField;

/// JSON description of a source term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceSpec {
    Constant { value: f64 },
    Disk { center: [f64; 2], radius: f64, amplitude: f64 },
    Rect { min: [f64; 2], max: [f64; 2], amplitude: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64, amplitude: f64 },
    Gaussian { center: [f64; 2], sigma: f64, amplitude: f64 },
    Sum { terms: Vec<SourceSpec> },
    Grid { path: String },
}

/// Nonnegative source `f`.
#[derive(Debug, Clone)]
pub enum Source {
    Constant(f64),
    Disk { center: Vec2, radius: f64, amplitude: f64 },
    Rect { min: Vec2, max: Vec2, amplitude: f64 },
    Annulus { center: Vec2, inner: f64, outer: f64, amplitude: f64 },
    Gaussian { center: Vec2, sigma: f64, amplitude: f64 },
    Sum(Vec<Source>),
    Grid(ScalarField),
}

fn v(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn nonneg(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::Config(format!("source {what} must be finite and nonnegative, got {x}")))
    }
}

impl Source {
    /// Compiles a spec; `load` resolves grid paths to fields.
    pub fn from_spec(spec: &SourceSpec, load: &dyn Fn(&str) -> Result<ScalarField>) -> Result<Source> {
        Ok(match spec {
            SourceSpec::Constant { value } => Source::Constant(nonneg(*value, "value")?),
            SourceSpec::Disk { center, radius, amplitude } => Source::Disk {
                center: v(*center),
                radius: nonneg(*radius, "radius")?,
                amplitude: nonneg(*amplitude, "amplitude")?,
            },
            SourceSpec::Rect { min, max, amplitude } => {
                Source::Rect { min: v(*min), max: v(*max), amplitude: nonneg(*amplitude, "amplitude")? }
            }
            SourceSpec::Annulus { center, inner, outer, amplitude } => Source::Annulus {
                center: v(*center),
                inner: nonneg(*inner, "inner radius")?,
                outer: nonneg(*outer, "outer radius")?,
                amplitude: nonneg(*amplitude, "amplitude")?,
            },
            SourceSpec::Gaussian { center, sigma, amplitude } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Config(format!("gaussian sigma must be positive, got {sigma}")));
                }
                Source::Gaussian { center: v(*center), sigma: *sigma, amplitude: nonneg(*amplitude, "amplitude")? }
            }
            SourceSpec::Sum { terms } => {
                Source::Sum(terms.iter().map(|t| Source::from_spec(t, load)).collect::<Result<_>>()?)
            }
            SourceSpec::Grid { path } => {
                let f = load(path)?;
                if f.values.iter().any(|x| !x.is_nan() && !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::Config(format!("grid source `{path}` has negative or infinite samples")));
                }
                Source::Grid(f)
            }
        })
    }

    pub fn value(&self, p: Vec2) -> f64 {
        match self {
            Source::Constant(c) => *c,
            Source::Disk { center, radius, amplitude } => {
                if (p - center).norm() < *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            Source::Rect { min, max, amplitude } => {
                if p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y {
                    *amplitude
                } else {
                    0.0
                }
            }
            Source::Annulus { center, inner, outer, amplitude } => {
                let r = (p - center).norm();
                if r > *inner && r < *outer {
                    *amplitude
                } else {
                    0.0
                }
            }
            Source::Gaussian { center, sigma, amplitude } => {
                amplitude * (-(p - center).norm_squared() / (2.0 * sigma * sigma)).exp()
            }
            Source::Sum(ts) => ts.iter().map(|t| t.value(p)).sum(),
            Source::Grid(f) => f.bilinear_or_zero(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Source::Constant(c) => *c == 0.0,
            Source::Disk { radius, amplitude, .. } => *radius == 0.0 || *amplitude == 0.0,
            Source::Rect { min, max, amplitude } => *amplitude == 0.0 || min.x >= max.x || min.y >= max.y,
            Source::Annulus { inner, outer, amplitude, .. } => *amplitude == 0.0 || inner >= outer,
            Source::Gaussian { amplitude, .. } => *amplitude == 0.0,
            Source::Sum(ts) => ts.iter().all(Source::is_zero),
            Source::Grid(f) => f.values.iter().all(|x| x.is_nan() || *x == 0.0),
        }
    }
}

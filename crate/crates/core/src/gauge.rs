//! Gauge functions of smooth convex bodies and their polars.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Shape of the convex body `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[derive(Default)]
pub enum GaugeKind {
    #[default]
    Euclidean,
    /// `K = {x: (x1/a)^2 + (x2/b)^2 <= 1}`.
    Ellipse { a: f64, b: f64 },
    /// Unit ball of the p-norm.
    Pnorm { p: f64 },
}

impl GaugeKind {
    fn validate(&self) -> Result<()> {
        match *self {
            GaugeKind::Euclidean => Ok(()),
            GaugeKind::Ellipse { a, b } => {
                if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidGauge(format!("ellipse semi-axes must be positive, got a={a}, b={b}")))
                }
            }
            GaugeKind::Pnorm { p } => {
                if p.is_finite() && p > 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidGauge(format!("p-norm needs 1 < p < inf, got p={p}")))
                }
            }
        }
    }

    fn dual(&self) -> GaugeKind {
        match *self {
            GaugeKind::Euclidean => GaugeKind::Euclidean,
            GaugeKind::Ellipse { a, b } => GaugeKind::Ellipse { a: 1.0 / a, b: 1.0 / b },
            GaugeKind::Pnorm { p } => GaugeKind::Pnorm { p: p / (p - 1.0) },
        }
    }

    fn eval(&self, xi: Vec2) -> f64 {
        match *self {
            GaugeKind::Euclidean => xi.norm(),
            GaugeKind::Ellipse { a, b } => (xi.x / a).hypot(xi.y / b),
            GaugeKind::Pnorm { p } => pnorm(xi, p),
        }
    }

    fn grad(&self, xi: Vec2) -> Vec2 {
        match *self {
            GaugeKind::Euclidean => xi / xi.norm(),
            GaugeKind::Ellipse { a, b } => {
                let r = self.eval(xi);
                Vec2::new(xi.x / (a * a), xi.y / (b * b)) / r
            }
            GaugeKind::Pnorm { p } => {
                let m = xi.x.abs().max(xi.y.abs());
                let s = xi / m;
                let r = pnorm(s, p);
                let g = |c: f64| c.signum() * (c.abs() / r).powf(p - 1.0);
                Vec2::new(g(s.x), g(s.y))
            }
        }
    }
}

fn pnorm(xi: Vec2, p: f64) -> f64 {
    let m = xi.x.abs().max(xi.y.abs());
    if m == 0.0 {
        return 0.0;
    }
    let (x, y) = (xi.x.abs() / m, xi.y.abs() / m);
    m * (x.powf(p) + y.powf(p)).powf(1.0 / p)
}

/// A gauge `rho` together with its polar `rho0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauge {
    kind: GaugeKind,
    polar: GaugeKind,
}

impl Default for Gauge {
    fn default() -> Self {
        Gauge::euclidean()
    }
}

impl Gauge {
    /// Builds the gauge and cross-checks the closed-form polar against a
    /// sampled support function of `K`.
    pub fn new(kind: GaugeKind) -> Result<Gauge> {
        kind.validate()?;
        let g = Gauge { kind, polar: kind.dual() };
        for k in 0..24 {
            let th = 0.3 + k as f64 * std::f64::consts::TAU / 24.0;
            let xi = Vec2::new(th.cos(), th.sin());
            let sampled = g.sampled_support(xi);
            let exact = g.polar_value(xi);
            if (sampled - exact).abs() > 1e-6 * exact.max(1.0) {
                return Err(Error::InvalidGauge(format!(
                    "polar mismatch at {xi:?}: sampled {sampled}, closed form {exact}"
                )));
            }
        }
        Ok(g)
    }

    pub fn euclidean() -> Gauge {
        Gauge { kind: GaugeKind::Euclidean, polar: GaugeKind::Euclidean }
    }

    pub fn kind(&self) -> GaugeKind {
        self.kind
    }

    /// The gauge whose body is `K0`.
    pub fn polar(&self) -> Gauge {
        Gauge { kind: self.polar, polar: self.kind }
    }

    /// `rho(xi) = inf {t >= 0 : xi in tK}`.
    pub fn value(&self, xi: Vec2) -> f64 {
        self.kind.eval(xi)
    }

    /// Support function of `K`, the gauge of `K0`. Measures path length.
    pub fn polar_value(&self, xi: Vec2) -> f64 {
        self.polar.eval(xi)
    }

    /// `D rho(xi)`, a point of the boundary of `K0`.
    pub fn gradient(&self, xi: Vec2) -> Result<Vec2> {
        if xi.x == 0.0 && xi.y == 0.0 {
            return Err(Error::GradientAtOrigin);
        }
        Ok(self.kind.grad(xi))
    }

    /// Constants with `c1 |xi| <= rho0(xi) <= c2 |xi|`.
    pub fn polar_bounds(&self) -> (f64, f64) {
        match self.polar {
            GaugeKind::Euclidean => (1.0, 1.0),
            GaugeKind::Ellipse { a, b } => (a.min(b), a.max(b)),
            GaugeKind::Pnorm { p } => {
                let c = 2f64.powf(1.0 / p - 0.5);
                (c.min(1.0), c.max(1.0))
            }
        }
    }

    /// Max of `<xi, x>` over the boundary of `K`, by angular sampling and a
    /// golden-section polish.
    fn sampled_support(&self, xi: Vec2) -> f64 {
        let f = |th: f64| {
            let e = Vec2::new(th.cos(), th.sin());
            xi.dot(&(e / self.value(e)))
        };
        let n = 720;
        let step = std::f64::consts::TAU / n as f64;
        let best = (0..n).map(|k| k as f64 * step).max_by(|s, t| f(*s).total_cmp(&f(*t))).unwrap_or(0.0);
        let (mut lo, mut hi) = (best - step, best + step);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - r * (hi - lo);
            let m2 = lo + r * (hi - lo);
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        f(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ellipse() -> Gauge {
        Gauge::new(GaugeKind::Ellipse { a: 2.0, b: 1.0 }).unwrap()
    }

    #[test]
    fn values() {
        let e = Gauge::euclidean();
        assert_relative_eq!(e.value(Vec2::new(3.0, 4.0)), 5.0);
        assert_relative_eq!(e.polar_value(Vec2::new(3.0, 4.0)), 5.0);
        let g = ellipse();
        assert_relative_eq!(g.value(Vec2::new(2.0, 0.0)), 1.0);
        assert_relative_eq!(g.value(Vec2::new(0.0, 3.0)), 3.0);
        assert_eq!(g.polar_value(Vec2::zeros()), 0.0);
        assert_eq!(g.value(Vec2::zeros()), 0.0);
    }

    #[test]
    fn ellipse_polar_matches_brute_force_support() {
        let g = ellipse();
        let xi = Vec2::new(1.0, 0.0);
        let n = 1_000_000;
        let best = (0..n)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / n as f64;
                xi.dot(&Vec2::new(2.0 * t.cos(), t.sin()))
            })
            .fold(f64::MIN, f64::max);
        assert_relative_eq!(best, 2.0, epsilon = 1e-9);
        assert_relative_eq!(g.polar_value(xi), best, epsilon = 1e-6);
    }

    #[test]
    fn gradients() {
        let e = Gauge::euclidean();
        assert_relative_eq!(e.gradient(Vec2::new(0.0, 2.0)).unwrap(), Vec2::new(0.0, 1.0));
        assert_eq!(e.gradient(Vec2::new(3.0, 4.0)).unwrap(), e.gradient(Vec2::new(6.0, 8.0)).unwrap());
        let g = ellipse();
        let xi = Vec2::new(2.0, 0.0);
        let d = g.gradient(xi).unwrap();
        let s = 1e-6;
        let fd = Vec2::new(
            (g.value(xi + Vec2::new(s, 0.0)) - g.value(xi - Vec2::new(s, 0.0))) / (2.0 * s),
            (g.value(xi + Vec2::new(0.0, s)) - g.value(xi - Vec2::new(0.0, s))) / (2.0 * s),
        );
        assert_relative_eq!(d, Vec2::new(0.5, 0.0), epsilon = 1e-12);
        assert_relative_eq!(fd, d, epsilon = 1e-8);
        assert_relative_eq!(d.dot(&xi), 1.0);
        assert!(matches!(g.gradient(Vec2::zeros()), Err(Error::GradientAtOrigin)));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Gauge::new(GaugeKind::Ellipse { a: 0.0, b: 1.0 }).is_err());
        assert!(Gauge::new(GaugeKind::Ellipse { a: 1.0, b: -2.0 }).is_err());
        assert!(Gauge::new(GaugeKind::Pnorm { p: 1.0 }).is_err());
        assert!(Gauge::new(GaugeKind::Pnorm { p: f64::INFINITY }).is_err());
        assert!(Gauge::new(GaugeKind::Pnorm { p: 3.0 }).is_ok());
    }

    #[test]
    fn pnorm_dualizes_to_conjugate_exponent() {
        let g = Gauge::new(GaugeKind::Pnorm { p: 3.0 }).unwrap();
        let xi = Vec2::new(1.0, 1.0);
        assert_relative_eq!(g.polar_value(xi), 2f64.powf(2.0 / 3.0), epsilon = 1e-12);
        assert_relative_eq!(g.polar().polar_value(xi), g.value(xi), epsilon = 1e-12);
    }

    #[test]
    fn serde_shape() {
        let k: GaugeKind = serde_json::from_str(r#"{"kind":"ellipse","a":2.0,"b":1.0}"#).unwrap();
        assert_eq!(k, GaugeKind::Ellipse { a: 2.0, b: 1.0 });
        let k: GaugeKind = serde_json::from_str(r#"{"kind":"pnorm","p":3.0}"#).unwrap();
        assert_eq!(k, GaugeKind::Pnorm { p: 3.0 });
        let k: GaugeKind = serde_json::from_str(r#"{"kind":"euclidean"}"#).unwrap();
        assert_eq!(k, GaugeKind::Euclidean);
    }
}

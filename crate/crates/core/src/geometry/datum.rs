use evalexpr::{ContextWithMutableVariables, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use super::polygon::Boundary;
use crate::error::{Error, Result};
use crate::gauge::Vec2;

/// Boundary height, with an explicit wall sentinel for `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Height {
    Finite(f64),
    Wall,
}

impl Height {
    pub fn finite(self) -> Option<f64> {
        match self {
            Height::Finite(v) => Some(v),
            Height::Wall => None,
        }
    }

    pub fn is_wall(self) -> bool {
        self == Height::Wall
    }

    /// Lower envelope, walls acting as `+inf`.
    pub fn min(self, other: Height) -> Height {
        match (self, other) {
            (Height::Wall, o) | (o, Height::Wall) => o,
            (Height::Finite(a), Height::Finite(b)) => Height::Finite(a.min(b)),
        }
    }
}

/// A closed-form expression in the variables `x`, `y`.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    node: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        let node = evalexpr::build_operator_tree(source)
            .map_err(|e| Error::Config(format!("bad expression `{source}`: {e}")))?;
        let e = Expr { source: source.to_string(), node };
        e.eval(Vec2::new(0.25, 0.5))?;
        Ok(e)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, p: Vec2) -> Result<f64> {
        let mut ctx = HashMapContext::new();
        let bad = |e: evalexpr::EvalexprError| Error::Config(format!("`{}`: {e}", self.source));
        ctx.set_value("x".into(), Value::Float(p.x)).map_err(bad)?;
        ctx.set_value("y".into(), Value::Float(p.y)).map_err(bad)?;
        match self.node.eval_with_context(&ctx).map_err(bad)? {
            Value::Float(v) => Ok(v),
            Value::Int(v) => Ok(v as f64),
            other => Err(Error::Config(format!("`{}` evaluates to {other:?}", self.source))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum PieceValue {
    Const(f64),
    Expr(Expr),
    Wall,
}

impl PieceValue {
    pub fn at(&self, p: Vec2) -> Result<Height> {
        Ok(match self {
            PieceValue::Const(c) => Height::Finite(*c),
            PieceValue::Expr(e) => Height::Finite(e.eval(p)?),
            PieceValue::Wall => Height::Wall,
        })
    }
}

/// Datum on an inclusive range of edges.
#[derive(Debug, Clone)]
pub struct DatumPiece {
    pub first: usize,
    pub last: usize,
    pub value: PieceValue,
}

/// JSON form of a piece value: a number, `"wall"`, or `{"expr": "..."}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PieceValueSpec {
    Number(f64),
    Word(String),
    Expr { expr: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatumPieceSpec {
    pub edges: [usize; 2],
    pub value: PieceValueSpec,
}

impl PieceValueSpec {
    pub fn compile(&self) -> Result<PieceValue> {
        match self {
            PieceValueSpec::Number(v) if v.is_finite() => Ok(PieceValue::Const(*v)),
            PieceValueSpec::Number(v) => Err(Error::Config(format!("datum value {v} is not finite"))),
            PieceValueSpec::Word(w) if w == "wall" => Ok(PieceValue::Wall),
            PieceValueSpec::Word(w) => Err(Error::Config(format!("unknown datum value `{w}`"))),
            PieceValueSpec::Expr { expr } => Ok(PieceValue::Expr(Expr::parse(expr)?)),
        }
    }
}

/// Piecewise datum; every edge belongs to exactly one piece.
#[derive(Debug, Clone)]
pub struct BoundaryDatum {
    pieces: Vec<DatumPiece>,
    owner: Vec<usize>,
}

impl BoundaryDatum {
    pub fn new(pieces: Vec<DatumPiece>, n_edges: usize) -> Result<BoundaryDatum> {
        let mut owner = vec![usize::MAX; n_edges];
        for (k, p) in pieces.iter().enumerate() {
            if p.first > p.last || p.last >= n_edges {
                return Err(Error::Config(format!(
                    "piece {k} has edge range [{}, {}] outside 0..{n_edges}",
                    p.first, p.last
                )));
            }
            for e in p.first..=p.last {
                if owner[e] != usize::MAX {
                    return Err(Error::Config(format!("edge {e} covered by pieces {} and {k}", owner[e])));
                }
                owner[e] = k;
            }
        }
        if let Some(e) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Config(format!("edge {e} has no datum")));
        }
        if pieces.iter().all(|p| matches!(p.value, PieceValue::Wall)) {
            return Err(Error::AllWall);
        }
        Ok(BoundaryDatum { pieces, owner })
    }

    pub fn pieces(&self) -> &[DatumPiece] {
        &self.pieces
    }

    pub fn piece_of_edge(&self, e: usize) -> usize {
        self.owner[e]
    }

    /// Value of the piece owning edge `e` at `p`.
    pub fn on_edge(&self, e: usize, p: Vec2) -> Result<Height> {
        self.pieces[self.owner[e]].value.at(p)
    }
}

/// One point of the boundary discretization.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub point: Vec2,
    pub value: Height,
    pub edge: usize,
    /// Position along the edge, `0` at its first vertex.
    pub offset: f64,
}

/// Splits every edge into `ceil(len / h_b)` pieces. A vertex sample carries
/// the smaller of its two one-sided values.
pub fn sample_boundary(boundary: &Boundary, datum: &BoundaryDatum, h_b: f64) -> Result<Vec<BoundarySample>> {
    let n = boundary.len();
    let mut out = Vec::new();
    for e in 0..n {
        let (a, b) = boundary.edge(e);
        let len = (b - a).norm();
        let m = ((len / h_b) * (1.0 - 1e-9)).ceil().max(1.0) as usize;
        for k in 0..m {
            let s = k as f64 / m as f64;
            let p = a + (b - a) * s;
            let mut value = datum.on_edge(e, p)?;
            if k == 0 {
                value = value.min(datum.on_edge((e + n - 1) % n, p)?);
            }
            out.push(BoundarySample { point: p, value, edge: e, offset: s * len });
        }
    }
    Ok(out)
}

/// Largest slope of the datum between consecutive finite samples of the same
/// piece.
pub fn datum_lipschitz(samples: &[BoundarySample], datum: &BoundaryDatum) -> f64 {
    let n = samples.len();
    let mut lip: f64 = 0.0;
    for k in 0..n {
        let s = &samples[k];
        let t = &samples[(k + 1) % n];
        if datum.piece_of_edge(s.edge) != datum.piece_of_edge(t.edge) {
            continue;
        }
        if let (Some(u), Some(v)) = (s.value.finite(), t.value.finite()) {
            let dist = (t.point - s.point).norm();
            if dist > 0.0 {
                lip = lip.max((u - v).abs() / dist);
            }
        }
    }
    lip
}

//! Uniform node grids and sampled scalar fields.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};
use crate::gauge::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Vec2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// Smallest grid with spacing `h` anchored at `lo` covering `[lo, hi]`.
    pub fn covering(lo: Vec2, hi: Vec2, h: f64) -> Grid {
        let nx = ((hi.x - lo.x) / h - 1e-9).ceil().max(0.0) as usize + 1;
        let ny = ((hi.y - lo.y) / h - 1e-9).ceil().max(0.0) as usize + 1;
        Grid { origin: lo, h, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn point_of(&self, k: usize) -> Vec2 {
        let (i, j) = self.ij(k);
        self.point(i, j)
    }

    /// Offset neighbor, if it stays on the grid.
    pub fn offset(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        let (i, j) = self.ij(k);
        let (i, j) = (i as i64 + di, j as i64 + dj);
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            None
        } else {
            Some(self.index(i as usize, j as usize))
        }
    }

    /// Nearest node to `p`, if `p` is within half a spacing of the grid.
    pub fn nearest(&self, p: Vec2) -> Option<usize> {
        let fi = ((p.x - self.origin.x) / self.h).round();
        let fj = ((p.y - self.origin.y) / self.h).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some(self.index(fi as usize, fj as usize))
    }

    /// Nodes within Euclidean distance `r` of `p`.
    pub fn within(&self, p: Vec2, r: f64) -> Vec<usize> {
        let span = |c: f64, o: f64, n: usize| {
            let lo = ((c - r - o) / self.h).ceil().max(0.0);
            let hi = ((c + r - o) / self.h).floor().min(n as f64 - 1.0);
            (lo as i64, hi as i64)
        };
        let (i0, i1) = span(p.x, self.origin.x, self.nx);
        let (j0, j1) = span(p.y, self.origin.y, self.ny);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let k = self.index(i as usize, j as usize);
                if (self.point_of(k) - p).norm() <= r {
                    out.push(k);
                }
            }
        }
        out
    }

    /// Bilinear stencil of `p`: corner indices with weights.
    pub fn stencil(&self, p: Vec2) -> Option<[(usize, f64); 4]> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (self.nx - 1) as f64 && fy <= (self.ny - 1) as f64) {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let i1 = (i + 1).min(self.nx - 1);
        let j1 = (j + 1).min(self.ny - 1);
        Some([
            (self.index(i, j), (1.0 - tx) * (1.0 - ty)),
            (self.index(i1, j), tx * (1.0 - ty)),
            (self.index(i, j1), (1.0 - tx) * ty),
            (self.index(i1, j1), tx * ty),
        ])
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.origin.x.to_bits() == other.origin.x.to_bits()
            && self.origin.y.to_bits() == other.origin.y.to_bits()
            && self.h.to_bits() == other.h.to_bits()
            && self.nx == other.nx
            && self.ny == other.ny
    }
}

/// Node values on a grid; `NaN` marks unset nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn unset(grid: Grid) -> ScalarField {
        ScalarField { grid, values: vec![f64::NAN; grid.len()] }
    }

    pub fn from_fn(grid: Grid, mask: &[bool], f: impl Fn(Vec2) -> f64) -> ScalarField {
        let values = (0..grid.len()).map(|k| if mask[k] { f(grid.point_of(k)) } else { f64::NAN }).collect();
        ScalarField { grid, values }
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        let v = self.values[k];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    /// Bilinear interpolation; corners with zero weight may be unset.
    pub fn bilinear(&self, p: Vec2) -> Option<f64> {
        let st = self.grid.stencil(p)?;
        let mut acc = 0.0;
        for (k, w) in st {
            if w == 0.0 {
                continue;
            }
            acc += w * self.get(k)?;
        }
        Some(acc)
    }

    /// Interpolation with unset corners contributing zero.
    pub fn bilinear_or_zero(&self, p: Vec2) -> f64 {
        match self.grid.stencil(p) {
            Some(st) => st.iter().map(|&(k, w)| if w == 0.0 { 0.0 } else { w * self.get(k).unwrap_or(0.0) }).sum(),
            None => 0.0,
        }
    }

    pub fn max_abs_diff(&self, other: &ScalarField, mask: impl Fn(usize) -> bool) -> f64 {
        (0..self.values.len())
            .filter(|&k| mask(k))
            .filter_map(|k| Some((self.get(k)? - other.get(k)?).abs()))
            .fold(0.0, f64::max)
    }
}

/// Writes fields as CSV: a grid header, column names, then one row per node
/// where any field is set.
pub fn write_csv(grid: &Grid, columns: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    let _ =
        writeln!(out, "# grid {:.16e} {:.16e} {:.16e} {} {}", grid.origin.x, grid.origin.y, grid.h, grid.nx, grid.ny);
    out.push_str("x,y");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for k in 0..grid.len() {
        if columns.iter().all(|(_, c)| c[k].is_nan()) {
            continue;
        }
        let p = grid.point_of(k);
        let _ = write!(out, "{:.16e},{:.16e}", p.x, p.y);
        for (_, c) in columns {
            if c[k].is_nan() {
                out.push_str(",nan");
            } else {
                let _ = write!(out, ",{:.16e}", c[k]);
            }
        }
        out.push('\n');
    }
    out
}

/// Parsed CSV field file.
#[derive(Debug, Clone)]
pub struct FieldTable {
    pub grid: Grid,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl FieldTable {
    pub fn column(&self, name: &str) -> Result<ScalarField> {
        let c = self.names.iter().position(|n| n == name).ok_or_else(|| Error::Parse(format!("no column `{name}`")))?;
        Ok(ScalarField { grid: self.grid, values: self.columns[c].clone() })
    }

    /// First value column, whatever its name.
    pub fn first_column(&self) -> Result<ScalarField> {
        let name = self.names.first().ok_or_else(|| Error::Parse("no value columns".into()))?.clone();
        self.column(&name)
    }
}

pub fn read_csv(reader: impl Read) -> Result<FieldTable> {
    let mut lines = BufReader::new(reader).lines();
    let bad = |m: &str| Error::Parse(m.to_string());
    let header = lines.next().ok_or_else(|| bad("empty field file"))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 7 || parts[0] != "#" || parts[1] != "grid" {
        return Err(bad("expected `# grid origin_x origin_y h nx ny`"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
    let cnt = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad count `{s}`")));
    let grid = Grid {
        origin: Vec2::new(num(parts[2])?, num(parts[3])?),
        h: num(parts[4])?,
        nx: cnt(parts[5])?,
        ny: cnt(parts[6])?,
    };
    if !(grid.h > 0.0) || grid.nx == 0 || grid.ny == 0 {
        return Err(bad("degenerate grid header"));
    }
    let names_line = lines.next().ok_or_else(|| bad("missing column names"))??;
    let names: Vec<String> = names_line.split(',').map(|s| s.trim().to_string()).collect();
    if names.len() < 3 || names[0] != "x" || names[1] != "y" {
        return Err(bad("columns must start with x,y"));
    }
    let names: Vec<String> = names[2..].to_vec();
    let mut columns = vec![vec![f64::NAN; grid.len()]; names.len()];
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != names.len() + 2 {
            return Err(Error::Parse(format!("row {} has {} fields", ln + 3, vals.len())));
        }
        let p = Vec2::new(num(vals[0])?, num(vals[1])?);
        let fi = (p.x - grid.origin.x) / grid.h;
        let fj = (p.y - grid.origin.y) / grid.h;
        let k = grid
            .nearest(p)
            .filter(|_| (fi - fi.round()).abs() < 1e-6 && (fj - fj.round()).abs() < 1e-6)
            .ok_or_else(|| Error::Parse(format!("row {} is not a grid node", ln + 3)))?;
        for (c, s) in vals[2..].iter().enumerate() {
            columns[c][k] = num(s.trim())?;
        }
    }
    Ok(FieldTable { grid, names, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_grid() {
        let g = Grid::covering(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), 0.25);
        assert_eq!((g.nx, g.ny), (9, 9));
        assert_eq!(g.point(8, 8), Vec2::new(1.0, 1.0));
        assert_eq!(g.ij(g.index(3, 5)), (3, 5));
    }

    #[test]
    fn bilinear_reproduces_affine() {
        let g = Grid::covering(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 0.1);
        let mask = vec![true; g.len()];
        let f = ScalarField::from_fn(g, &mask, |p| 2.0 * p.x - 3.0 * p.y + 1.0);
        let p = Vec2::new(0.37, 0.81);
        assert!((f.bilinear(p).unwrap() - (2.0 * 0.37 - 3.0 * 0.81 + 1.0)).abs() < 1e-12);
        assert!(f.bilinear(Vec2::new(1.5, 0.5)).is_none());
    }

    #[test]
    fn bilinear_skips_zero_weight_corners() {
        let g = Grid::covering(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 0.5);
        let mut f = ScalarField::unset(g);
        f.values[g.index(1, 1)] = 3.0;
        assert_eq!(f.bilinear(Vec2::new(0.5, 0.5)), Some(3.0));
        assert_eq!(f.bilinear(Vec2::new(0.6, 0.5)), None);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Grid::covering(Vec2::new(-0.3, 0.1), Vec2::new(0.7, 0.9), 1.0 / 7.0);
        let mut mask = vec![true; g.len()];
        mask[3] = false;
        let f = ScalarField::from_fn(g, &mask, |p| (p.x * 13.0).sin() / 3.0);
        let text = write_csv(&g, &[("u", &f.values)]);
        let t = read_csv(text.as_bytes()).unwrap();
        assert!(t.grid.same_as(&g));
        let back = t.column("u").unwrap();
        for k in 0..g.len() {
            assert!(back.values[k].to_bits() == f.values[k].to_bits(), "node {k}");
        }
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_csv("hello\n".as_bytes()).is_err());
        assert!(read_csv("# grid 0 0 1 2 2\nx,y,u\n0.5,0,1\n".as_bytes()).is_err());
    }
}

//! Uniform tensor grids, sampled fields and the small value types every other
//! module computes with.
//!
//! Points are indexed with the first axis running fastest: in 2D the index of
//! `(ix, iy)` is `ix + n * iy`. Balls are realized as subsets of grid points
//! selected by a Euclidean distance test.

use std::fmt::Write as _;
use std::ops::Deref;
use std::path::Path;

use crate::error::{Error, Result};

/// Largest ambient dimension handled by the point-level types.
pub const MAX_DIM: usize = 3;

/// A point (or vector) in R^d, d <= 3, stored inline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    dim: usize,
    x: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "point dimension {} outside 1..={MAX_DIM}",
            coords.len()
        );
        let mut x = [0.0; MAX_DIM];
        x[..coords.len()].copy_from_slice(coords);
        Self {
            dim: coords.len(),
            x,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(&[0.0; MAX_DIM][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, t: f64) -> Self {
        let mut out = *self;
        out.x.iter_mut().for_each(|v| *v *= t);
        out
    }

    /// `self + t * other`
    pub fn axpy(&self, t: f64, other: &[f64]) -> Self {
        let mut out = *self;
        for (o, v) in out.x.iter_mut().zip(other) {
            *o += t * v;
        }
        out
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn set(&mut self, i: usize, v: f64) {
        assert!(i < self.dim);
        self.x[i] = v;
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.x[..self.dim]
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point::new(v)
    }
}

/// Symmetric d x d matrix stored as its upper triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat {
    dim: usize,
    upper: [f64; 6],
}

#[inline]
fn upper_slot(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row offsets of the packed upper triangle
    let row_start = match (dim, i) {
        (_, 0) => 0,
        (2, 1) => 2,
        (3, 1) => 3,
        (3, 2) => 5,
        _ => unreachable!("index ({i},{j}) out of range for dim {dim}"),
    };
    row_start + (j - i)
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self {
            dim,
            upper: [0.0; 6],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&[1.0; MAX_DIM][..dim])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds from `f(i, j)` for `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from a full row-major matrix; rejects asymmetric input.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || dim > MAX_DIM || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Domain(format!("matrix must be square with size 1..={MAX_DIM}")));
        }
        for i in 0..dim {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Domain(format!(
                        "matrix is not symmetric: entry ({i},{j}) = {} but ({j},{i}) = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[upper_slot(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.upper[upper_slot(self.dim, i, j)] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, t: f64) -> Self {
        let mut out = *self;
        out.upper.iter_mut().for_each(|v| *v *= t);
        out
    }

    pub fn add(&self, other: &SymMat) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (o, v) in out.upper.iter_mut().zip(other.upper) {
            *o += v;
        }
        out
    }

    pub fn sub(&self, other: &SymMat) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Frobenius inner product `sum_ij A_ij B_ij`.
    pub fn frobenius_dot(&self, other: &SymMat) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    /// Quadratic form `v^T M w`.
    pub fn bilinear(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += v[i] * self.get(i, j) * w[j];
            }
        }
        s
    }

    pub fn mul_vec(&self, v: &[f64]) -> Point {
        let mut out = Point::zeros(self.dim);
        for i in 0..self.dim {
            out.set(i, (0..self.dim).map(|j| self.get(i, j) * v[j]).sum());
        }
        out
    }

    /// Eigenvalues in ascending order, closed form for every supported size.
    pub fn eigenvalues(&self) -> Point {
        match self.dim {
            1 => Point::new(&[self.get(0, 0)]),
            2 => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
                let mean = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                Point::new(&[mean - rad, mean + rad])
            }
            _ => eigenvalues_3(self),
        }
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    }

    /// `Q D Q^T` for an orthogonal matrix given by its columns.
    pub fn conjugate_diag(q_cols: &[Point], d: &[f64]) -> Self {
        let dim = d.len();
        Self::from_fn(dim, |i, j| (0..dim).map(|k| q_cols[k][i] * d[k] * q_cols[k][j]).sum())
    }
}

// Trigonometric closed form for real symmetric 3x3 matrices.
fn eigenvalues_3(m: &SymMat) -> Point {
    let p1 = m.get(0, 1).powi(2) + m.get(0, 2).powi(2) + m.get(1, 2).powi(2);
    let q = m.trace() / 3.0;
    if p1 == 0.0 {
        let mut e = [m.get(0, 0), m.get(1, 1), m.get(2, 2)];
        e.sort_by(f64::total_cmp);
        return Point::new(&e);
    }
    let p2 = (0..3).map(|i| (m.get(i, i) - q).powi(2)).sum::<f64>() + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = m.sub(&SymMat::identity(3).scale(q)).scale(1.0 / p);
    let det_b = b.get(0, 0) * (b.get(1, 1) * b.get(2, 2) - b.get(1, 2) * b.get(1, 2))
        - b.get(0, 1) * (b.get(0, 1) * b.get(2, 2) - b.get(1, 2) * b.get(0, 2))
        + b.get(0, 2) * (b.get(0, 1) * b.get(1, 2) - b.get(1, 1) * b.get(0, 2));
    let r = (0.5 * det_b).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e_max = q + 2.0 * p * phi.cos();
    let e_min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e_mid = 3.0 * q - e_max - e_min;
    Point::new(&[e_min, e_mid, e_max])
}

/// Value, gradient and Hessian of a function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Point,
    pub hessian: SymMat,
}

impl Jet {
    pub fn new(value: f64, gradient: Point, hessian: SymMat) -> Self {
        assert_eq!(gradient.dim(), hessian.dim(), "jet gradient/hessian dimension mismatch");
        Self {
            value,
            gradient,
            hessian,
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.dim()
    }
}

/// `l(X) = a + b . X`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFn {
    pub a: f64,
    pub b: Point,
}

impl AffineFn {
    pub fn new(a: f64, b: &[f64]) -> Self {
        Self { a, b: Point::new(b) }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            a: 0.0,
            b: Point::zeros(dim),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a + self.b.dot(x)
    }
}

/// Uniform tensor grid over `[lo, hi]^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    lo: f64,
    hi: f64,
    h: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points per axis, got {n}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!("empty or non-finite extent [{lo}, {hi}]")));
        }
        Ok(Self {
            dim,
            n,
            lo,
            hi,
            h: (hi - lo) / (n - 1) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.hi
        } else {
            self.lo + i as f64 * self.h
        }
    }

    /// Per-axis indices of a flat index.
    #[inline]
    pub fn multi_index(&self, index: usize) -> [usize; 2] {
        match self.dim {
            1 => [index, 0],
            _ => [index % self.n, index / self.n],
        }
    }

    #[inline]
    pub fn flat_index(&self, ix: usize, iy: usize) -> usize {
        ix + self.n * iy
    }

    pub fn coord(&self, index: usize) -> Point {
        let [ix, iy] = self.multi_index(index);
        match self.dim {
            1 => Point::new(&[self.axis_coord(ix)]),
            _ => Point::new(&[self.axis_coord(ix), self.axis_coord(iy)]),
        }
    }

    /// Nearest grid index along one axis, clamped to the grid.
    pub fn nearest_axis_index(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.h).round();
        t.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Flat index of the grid point nearest to `x`.
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        match self.dim {
            1 => self.nearest_axis_index(x[0]),
            _ => self.flat_index(self.nearest_axis_index(x[0]), self.nearest_axis_index(x[1])),
        }
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let [ix, iy] = self.multi_index(index);
        let edge = |i: usize| i == 0 || i == self.n - 1;
        edge(ix) || (self.dim == 2 && edge(iy))
    }

    /// Indices of all grid points `X` with `|X - center| <= radius`.
    ///
    /// The distance test carries a relative slack of 1e-12 so that points
    /// lying on the sphere up to coordinate rounding are included.
    pub fn ball_indices(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let r2 = radius * radius * (1.0 + 1e-12);
        let axis_range = |c: f64| {
            let lo = ((c - radius - self.lo) / self.h).floor().max(0.0) as usize;
            let hi = (((c + radius - self.lo) / self.h).ceil().max(0.0) as usize).min(self.n - 1);
            lo..=hi
        };
        let mut out = Vec::new();
        match self.dim {
            1 => {
                for i in axis_range(center[0]) {
                    let d = self.axis_coord(i) - center[0];
                    if d * d <= r2 {
                        out.push(i);
                    }
                }
            }
            _ => {
                let xr = axis_range(center[0]);
                for j in axis_range(center[1]) {
                    let dy = self.axis_coord(j) - center[1];
                    for i in xr.clone() {
                        let dx = self.axis_coord(i) - center[0];
                        if dx * dx + dy * dy <= r2 {
                            out.push(self.flat_index(i, j));
                        }
                    }
                }
            }
        }
        out
    }

    /// Whether the grid has a point within `1e-12 h` of `x`.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.coord(self.nearest_index(x)).distance(x) <= 1e-12 * self.h
    }

    pub fn center(&self) -> Point {
        let c = 0.5 * (self.lo + self.hi);
        Point::new(&[c, c][..self.dim])
    }
}

/// Real values sampled on every point of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Sampling {
                index,
                coords: grid.coord(index).to_vec(),
                value,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise `self - other` on the same grid.
    pub fn difference(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        ScalarField::new(self.grid, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Writes the field in the text dump format: a `# dim= n= lo= hi=` header
    /// then one `index,x[,y],value` row per point, 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let g = &self.grid;
        let mut s = String::with_capacity(48 * g.len());
        let _ = writeln!(s, "# dim={} n={} lo={:.16e} hi={:.16e}", g.dim, g.n, g.lo, g.hi);
        for (i, v) in self.values.iter().enumerate() {
            let _ = write!(s, "{i}");
            for c in g.coord(i).iter() {
                let _ = write!(s, ",{c:.16e}");
            }
            let _ = writeln!(s, ",{v:.16e}");
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
        let (mut dim, mut n, mut lo, mut hi) = (None, None, None, None);
        for tok in header.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header token '{tok}'")))?;
            let bad = |_| Error::Parse(format!("bad header value '{tok}'"));
            match k {
                "dim" => dim = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "n" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "lo" => lo = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "hi" => hi = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(Error::Parse(format!("unknown header key '{k}'"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("header lacks '{k}'"));
        let grid = Grid::new(
            dim.ok_or_else(|| missing("dim"))?,
            n.ok_or_else(|| missing("n"))?,
            lo.ok_or_else(|| missing("lo"))?,
            hi.ok_or_else(|| missing("hi"))?,
        )?;
        let mut values = vec![f64::NAN; grid.len()];
        let mut seen = vec![false; grid.len()];
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != grid.dim + 2 {
                return Err(Error::Parse(format!(
                    "row {} has {} columns, expected {}",
                    lineno + 2,
                    cols.len(),
                    grid.dim + 2
                )));
            }
            let index: usize = cols[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad index on row {}", lineno + 2)))?;
            if index >= grid.len() || seen[index] {
                return Err(Error::Parse(format!("index {index} out of range or repeated")));
            }
            let value: f64 = cols[grid.dim + 1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad value on row {}", lineno + 2)))?;
            values[index] = value;
            seen[index] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Parse(format!("no row for index {i}")));
        }
        ScalarField::new(grid, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

pub fn make_grid(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Grid> {
    Grid::new(dim, n, lo, hi)
}

/// Evaluates `f` at every grid point.
pub fn sample(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<ScalarField> {
    let values = (0..grid.len()).map(|i| f(&grid.coord(i))).collect();
    ScalarField::new(*grid, values)
}

/// Max of `|values|` over grid points in the closed ball.
pub fn sup_norm_on_ball(field: &ScalarField, center: &[f64], radius: f64) -> Result<f64> {
    let idx = field.grid.ball_indices(center, radius);
    if idx.is_empty() {
        return Err(Error::EmptyBall {
            center: center.to_vec(),
            radius,
        });
    }
    Ok(idx.iter().fold(0.0_f64, |m, &i| m.max(field.values[i].abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_points() {
        let g = make_grid(1, 3, 0.0, 1.0).unwrap();
        assert_eq!(g.h(), 0.5);
        let xs: Vec<f64> = (0..g.len()).map(|i| g.coord(i)[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);

        let g = make_grid(2, 5, -1.0, 1.0).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.len(), 25);
        assert_eq!(&*g.coord(0), &[-1.0, -1.0]);
        assert_eq!(&*g.coord(24), &[1.0, 1.0]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(make_grid(1, 2, 0.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(1, 5, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(3, 5, 0.0, 1.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn sampling() {
        let g = make_grid(1, 3, 0.0, 1.0).unwrap();
        assert!(sample(&g, |_| 0.0).unwrap().values().iter().all(|&v| v == 0.0));
        assert_eq!(sample(&g, |x| x[0]).unwrap().values(), &[0.0, 0.5, 1.0]);
        match sample(&g, |x| 1.0 / x[0]) {
            Err(Error::Sampling { index, coords, .. }) => {
                assert_eq!(index, 0);
                assert_eq!(coords, vec![0.0]);
            }
            other => panic!("expected sampling error, got {other:?}"),
        }
    }

    #[test]
    fn ball_sup_norms() {
        let g = make_grid(1, 201, -1.0, 1.0).unwrap();
        let f = sample(&g, |x| x[0]).unwrap();
        assert!((sup_norm_on_ball(&f, &[0.0], 0.5).unwrap() - 0.5).abs() < 1e-15);

        let c = sample(&g, |_| -3.5).unwrap();
        assert_eq!(sup_norm_on_ball(&c, &[0.3], 0.2).unwrap(), 3.5);

        let q = sample(&g, |x| x[0] * x[0]).unwrap();
        assert!((sup_norm_on_ball(&q, &[0.0], 0.3).unwrap() - 0.09).abs() < 1e-3);

        let g2 = make_grid(2, 5, -1.0, 1.0).unwrap();
        let f2 = sample(&g2, |_| 1.0).unwrap();
        assert!(matches!(
            sup_norm_on_ball(&f2, &[0.25, 0.25], 0.1),
            Err(Error::EmptyBall { .. })
        ));
    }

    #[test]
    fn coordinate_round_trip() {
        let g = make_grid(2, 17, -1.0, 3.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.nearest_index(&g.coord(i)), i);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = make_grid(2, 9, -1.0, 1.0).unwrap();
        let f = sample(&g, |x| (x[0] * 3.1).sin() * (x[1] + 0.1).exp() / 7.0).unwrap();
        let back = ScalarField::from_csv_str(&f.to_csv_string()).unwrap();
        assert_eq!(back, f);
        assert!(f.to_csv_string().starts_with("# dim=2 n=9 lo="));
    }

    #[test]
    fn csv_loader_rejects_missing_rows() {
        let g = make_grid(1, 3, 0.0, 1.0).unwrap();
        let f = sample(&g, |x| x[0]).unwrap();
        let text = f.to_csv_string();
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(ScalarField::from_csv_str(&truncated), Err(Error::Parse(_))));
    }

    #[test]
    fn symmetric_eigenvalues() {
        let m = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = m.eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);

        let m3 = SymMat::from_rows(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 2.0]])
            .unwrap();
        let e3 = m3.eigenvalues();
        let s = 2.0_f64.sqrt();
        for (got, want) in e3.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(SymMat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).is_err());
    }
}

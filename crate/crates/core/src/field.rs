//! Grid and collar fields, interpolation and the text field-file format.

use crate::error::{Error, Result};
use crate::geometry::{CollarChart, Grid, Point};
use std::fmt::Write as _;
use std::path::Path;

/// Scalar field on a Cartesian grid; masked nodes hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub spacing: f64,
    pub trim: f64,
    pub domain_hash: u64,
    pub values: Vec<f64>,
}

/// Lagrange weights and derivative weights of the cubic through the nodes
/// `shift − 1, shift, shift + 1, shift + 2` at offset t.
fn cubic_weights(t: f64, shift: i32) -> ([f64; 4], [f64; 4]) {
    let x: [f64; 4] = std::array::from_fn(|m| (m as i32 + shift - 1) as f64);
    let mut w = [0.0; 4];
    let mut dw = [0.0; 4];
    for m in 0..4 {
        let mut denom = 1.0;
        let mut prod = 1.0;
        let mut dprod = 0.0;
        for n in 0..4 {
            if n == m {
                continue;
            }
            denom *= x[m] - x[n];
            dprod = dprod * (t - x[n]) + prod;
            prod *= t - x[n];
        }
        w[m] = prod / denom;
        dw[m] = dprod / denom;
    }
    (w, dw)
}

/// Stencil shifts tried in order, centred first.
const SHIFTS: [(i32, i32); 9] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

impl GridField {
    /// All-NaN field with the layout of `grid`.
    pub fn masked(grid: &Grid) -> Self {
        GridField {
            nx: grid.nx,
            ny: grid.ny,
            origin: grid.origin,
            spacing: grid.spacing,
            trim: grid.trim,
            domain_hash: grid.domain_hash,
            values: vec![f64::NAN; grid.node_count()],
        }
    }

    /// Scatters per-unknown values onto the grid.
    pub fn from_unknowns(grid: &Grid, x: &[f64]) -> Self {
        let mut f = Self::masked(grid);
        for (u, &k) in grid.unknown_nodes().iter().enumerate() {
            f.values[k] = x[u];
        }
        f
    }

    /// Evaluates `g(node, point)` at interior nodes.
    pub fn from_fn(grid: &Grid, mut g: impl FnMut(usize, Point) -> f64) -> Self {
        let mut f = Self::masked(grid);
        for &k in grid.unknown_nodes() {
            f.values[k] = g(k, grid.node_point(k));
        }
        f
    }

    pub fn unknowns(&self, grid: &Grid) -> Vec<f64> {
        grid.unknown_nodes().iter().map(|&k| self.values[k]).collect()
    }

    pub fn same_layout(&self, other: &GridField) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.origin == other.origin
            && self.spacing == other.spacing
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn node_point(&self, k: usize) -> Point {
        Point::new(
            self.origin.x + (k % self.nx) as f64 * self.spacing,
            self.origin.y + (k / self.nx) as f64 * self.spacing,
        )
    }

    pub fn map(&self, mut g: impl FnMut(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            if v.is_finite() {
                *v = g(*v);
            }
        }
        out
    }

    /// Largest |value| over unmasked nodes accepted by `keep`.
    pub fn sup_norm_where(&self, mut keep: impl FnMut(usize) -> bool) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, v)| v.is_finite() && keep(*k))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    }

    /// Base cell, offsets and the first fully unmasked 4×4 block among the
    /// centred and one-cell-shifted choices.
    fn stencil(&self, p: Point) -> Option<(i64, i64, f64, f64, i32, i32)> {
        let fx = (p.x - self.origin.x) / self.spacing;
        let fy = (p.y - self.origin.y) / self.spacing;
        let (i, j) = (fx.floor() as i64, fy.floor() as i64);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        'shift: for &(sx, sy) in SHIFTS.iter() {
            let (i0, j0) = (i + sx as i64 - 1, j + sy as i64 - 1);
            if i0 < 0 || j0 < 0 || i0 + 3 >= self.nx as i64 || j0 + 3 >= self.ny as i64 {
                continue;
            }
            for b in 0..4 {
                for a in 0..4 {
                    if !self.get((i0 + a) as usize, (j0 + b) as usize).is_finite() {
                        continue 'shift;
                    }
                }
            }
            return Some((i, j, tx, ty, sx, sy));
        }
        None
    }

    /// Bicubic (tensor Lagrange) interpolation on the nearest fully
    /// unmasked 4×4 block; NaN when no such block contains the point.
    pub fn sample(&self, p: Point) -> f64 {
        match self.stencil(p) {
            None => f64::NAN,
            Some((i, j, tx, ty, sx, sy)) => {
                let (wx, _) = cubic_weights(tx, sx);
                let (wy, _) = cubic_weights(ty, sy);
                self.contract(i + sx as i64 - 1, j + sy as i64 - 1, &wx, &wy)
            }
        }
    }

    /// Gradient of the bicubic interpolant.
    pub fn sample_gradient(&self, p: Point) -> Option<Point> {
        let (i, j, tx, ty, sx, sy) = self.stencil(p)?;
        let (wx, dx) = cubic_weights(tx, sx);
        let (wy, dy) = cubic_weights(ty, sy);
        let (i0, j0) = (i + sx as i64 - 1, j + sy as i64 - 1);
        Some(Point::new(
            self.contract(i0, j0, &dx, &wy) / self.spacing,
            self.contract(i0, j0, &wx, &dy) / self.spacing,
        ))
    }

    fn contract(&self, i0: i64, j0: i64, wx: &[f64; 4], wy: &[f64; 4]) -> f64 {
        let mut s = 0.0;
        for b in 0..4 {
            let mut row = 0.0;
            for a in 0..4 {
                row += wx[a] * self.get((i0 + a as i64) as usize, (j0 + b as i64) as usize);
            }
            s += wy[b] * row;
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# liouville grid field").unwrap();
        write_header(&mut s, self);
        s.push_str("values\n");
        for v in &self.values {
            writeln!(s, "{v}").unwrap();
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut lines = FieldLines::new(&text, path);
        let f = lines.grid_header()?;
        let values = lines.values(f.nx * f.ny)?;
        Ok(GridField { values, ..f })
    }
}

fn write_header(s: &mut String, f: &GridField) {
    writeln!(s, "nx {}", f.nx).unwrap();
    writeln!(s, "ny {}", f.ny).unwrap();
    writeln!(s, "origin {} {}", f.origin.x, f.origin.y).unwrap();
    writeln!(s, "spacing {}", f.spacing).unwrap();
    writeln!(s, "trim {}", f.trim).unwrap();
    writeln!(s, "domain_hash {:016x}", f.domain_hash).unwrap();
}

struct FieldLines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    path: String,
}

impl<'a> FieldLines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        FieldLines {
            lines: text.lines().enumerate(),
            path: path.display().to_string(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        loop {
            match self.lines.next() {
                Some((_, l)) if l.trim().is_empty() || l.starts_with('#') => continue,
                Some((n, l)) => return Ok((n + 1, l.trim())),
                None => return Err(self.err(0, "unexpected end of file")),
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, l) = self.next_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(n, format!("expected `{key}`")));
        }
        Ok((n, parts.collect()))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, parts) = self.keyed(key)?;
        match parts.as_slice() {
            [v] => v.parse().map_err(|_| self.err(n, format!("bad value for `{key}`"))),
            _ => Err(self.err(n, format!("`{key}` takes one value"))),
        }
    }

    fn pair(&mut self, key: &str) -> Result<Point> {
        let (n, parts) = self.keyed(key)?;
        match parts.as_slice() {
            [a, b] => match (a.parse(), b.parse()) {
                (Ok(x), Ok(y)) => Ok(Point::new(x, y)),
                _ => Err(self.err(n, format!("bad value for `{key}`"))),
            },
            _ => Err(self.err(n, format!("`{key}` takes two values"))),
        }
    }

    fn grid_header(&mut self) -> Result<GridField> {
        let nx = self.number("nx")?;
        let ny = self.number("ny")?;
        let origin = self.pair("origin")?;
        let spacing = self.number("spacing")?;
        let trim = self.number("trim")?;
        let (n, parts) = self.keyed("domain_hash")?;
        let domain_hash = match parts.as_slice() {
            [h] => u64::from_str_radix(h, 16).map_err(|_| self.err(n, "bad domain hash"))?,
            _ => return Err(self.err(n, "`domain_hash` takes one value")),
        };
        Ok(GridField {
            nx,
            ny,
            origin,
            spacing,
            trim,
            domain_hash,
            values: Vec::new(),
        })
    }

    fn values(&mut self, count: usize) -> Result<Vec<f64>> {
        let (n, l) = self.next_line()?;
        if l != "values" {
            return Err(self.err(n, "expected `values`"));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = self.next_line()?;
            out.push(l.parse().map_err(|_| self.err(n, format!("bad value `{l}`")))?);
        }
        Ok(out)
    }
}

/// Placement of a collar field in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartFrame {
    pub base: Point,
    /// Inward normal at the base point (the T direction at T = 0).
    pub e1: Point,
}

impl From<&CollarChart> for ChartFrame {
    fn from(c: &CollarChart) -> Self {
        ChartFrame {
            base: c.base,
            e1: c.e1,
        }
    }
}

/// Field on the collar grid `T_i = iθ/nt` (i = 1..=nt), `Y_j = −θ + jθ/nt`
/// (j = 0..=2nt).  Values at T = 0 are kept separately as a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CollarField {
    pub nt: usize,
    pub theta: f64,
    pub values: Vec<f64>,
    pub trace: Option<Vec<f64>>,
    pub periodic: bool,
    pub frame: Option<ChartFrame>,
}

impl CollarField {
    pub fn zeros(nt: usize, theta: f64) -> Self {
        CollarField {
            nt,
            theta,
            values: vec![0.0; nt * (2 * nt + 1)],
            trace: None,
            periodic: false,
            frame: None,
        }
    }

    /// Samples `f(T, Y)` on rows T > 0; the trace is `f(0, Y)`.
    pub fn from_fn(nt: usize, theta: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(nt, theta);
        for i in 1..=nt {
            for j in 0..=2 * nt {
                let (t, y) = out.coords(i, j);
                out.set(i, j, f(t, y));
            }
        }
        out.trace = Some((0..=2 * nt).map(|j| f(0.0, out.coords(0, j).1)).collect());
        out
    }

    /// Shape-compatible zero field on the chart.
    pub fn on_chart(chart: &CollarChart) -> Self {
        let mut f = Self::zeros(chart.nt, chart.theta);
        f.frame = Some(chart.into());
        f
    }

    pub fn spacing(&self) -> f64 {
        self.theta / self.nt as f64
    }

    pub fn ny(&self) -> usize {
        2 * self.nt
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.spacing();
        (i as f64 * h, -self.theta + j as f64 * h)
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.nt);
        (i - 1) * (2 * self.nt + 1) + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.values[k] = v;
    }

    /// Value at row `i`, where row 0 is the stored trace or, when missing,
    /// the cubic extrapolation 4f₁ − 6f₂ + 4f₃ − f₄.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        if i > 0 {
            return self.get(i, j);
        }
        match &self.trace {
            Some(t) => t[j],
            None => self.extrapolated_trace(j),
        }
    }

    pub fn extrapolated_trace(&self, j: usize) -> f64 {
        4.0 * self.get(1, j) - 6.0 * self.get(2, j) + 4.0 * self.get(3, j) - self.get(4, j)
    }

    pub fn trace_values(&self) -> Vec<f64> {
        (0..=self.ny()).map(|j| self.at(0, j)).collect()
    }

    /// max_i |f(T_i, −θ) − f(T_i, θ)|.
    pub fn period_mismatch(&self) -> f64 {
        (1..=self.nt)
            .map(|i| (self.get(i, 0) - self.get(i, self.ny())).abs())
            .fold(0.0, f64::max)
    }

    pub fn zip_with(&self, other: &CollarField, g: impl Fn(f64, f64) -> f64) -> CollarField {
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a = g(*a, *b);
        }
        out.trace = match (&self.trace, &other.trace) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| g(*x, *y)).collect()),
            _ => None,
        };
        out
    }

    /// Sup norm over rows with T ≥ t_min (rows only, trace excluded).
    pub fn sup_norm_from(&self, t_min: f64) -> f64 {
        let mut m = 0.0f64;
        for i in 1..=self.nt {
            if self.coords(i, 0).0 + 1e-12 < t_min {
                continue;
            }
            for j in 0..=self.ny() {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_from(0.0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# liouville collar field").unwrap();
        writeln!(s, "nt {}", self.nt).unwrap();
        writeln!(s, "theta {}", self.theta).unwrap();
        writeln!(s, "periodic {}", self.periodic as u8).unwrap();
        match &self.frame {
            Some(fr) => {
                writeln!(s, "base {} {}", fr.base.x, fr.base.y).unwrap();
                writeln!(s, "normal {} {}", fr.e1.x, fr.e1.y).unwrap();
            }
            None => {
                writeln!(s, "base NaN NaN").unwrap();
                writeln!(s, "normal NaN NaN").unwrap();
            }
        }
        writeln!(s, "trace {}", self.trace.is_some() as u8).unwrap();
        if let Some(t) = &self.trace {
            for v in t {
                writeln!(s, "{v}").unwrap();
            }
        }
        s.push_str("values\n");
        for v in &self.values {
            writeln!(s, "{v}").unwrap();
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut lines = FieldLines::new(&text, path);
        let nt: usize = lines.number("nt")?;
        let theta: f64 = lines.number("theta")?;
        let periodic: u8 = lines.number("periodic")?;
        let base = lines.pair("base")?;
        let e1 = lines.pair("normal")?;
        let has_trace: u8 = lines.number("trace")?;
        let ncol = 2 * nt + 1;
        let mut trace = Vec::new();
        if has_trace == 1 {
            for _ in 0..ncol {
                let (n, l) = lines.next_line()?;
                trace.push(l.parse().map_err(|_| lines.err(n, "bad trace value"))?);
            }
        }
        let values = lines.values(nt * ncol)?;
        Ok(CollarField {
            nt,
            theta,
            values,
            trace: (has_trace == 1).then_some(trace),
            periodic: periodic == 1,
            frame: base.x.is_finite().then_some(ChartFrame { base, e1 }),
        })
    }
}

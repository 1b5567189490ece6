//! Boundary-fitted collar charts `(T, Y) ∈ [0, θ] × [−θ, θ]` with `T = d`.

use super::{Domain2D, Point, Projection};
use crate::error::{invalid, Error, Result};

/// Smallest admissible value of ∂d/∂X over the chart.
const MIN_JACOBIAN: f64 = 0.5;

/// Collar chart around the boundary point `base`.  Local coordinates are
/// `X = (p − base)·e1`, `Y = (p − base)·e2`, with `e1` the inward normal at
/// `base` and `e2` its counterclockwise quarter turn, so that ∇d = (1, 0)
/// at the base point.  The chart coordinates are `T = d(p)` and `Y`.
///
/// Sampled data live on the uniform grid `T_i = i·θ/nt`, `i = 0..=nt`,
/// `Y_j = −θ + j·θ/nt`, `j = 0..=2nt`, stored row by row in `T`.
#[derive(Debug, Clone)]
pub struct CollarChart {
    pub component: usize,
    pub s0: f64,
    pub base: Point,
    pub theta: f64,
    pub e1: Point,
    pub e2: Point,
    pub nt: usize,
    points: Vec<Point>,
    projections: Vec<Projection>,
    d_y: Vec<f64>,
    laplacian_d: Vec<f64>,
    min_jacobian: f64,
}

impl CollarChart {
    pub fn new(domain: &Domain2D, component: usize, s0: f64, theta: f64, nt: usize) -> Result<Self> {
        if !(theta > 0.0) {
            return invalid("chart half-width must be positive");
        }
        if nt < 2 {
            return invalid("chart needs at least 2 rows in T");
        }
        if theta >= domain.reach() {
            return Err(Error::ChartRejected(format!(
                "theta = {theta} is not below the reach {}",
                domain.reach()
            )));
        }
        let base = domain.boundary_point(component, s0);
        let e1 = domain.inward_normal(component, s0);
        let e2 = e1.perp();
        let mut chart = CollarChart {
            component,
            s0,
            base,
            theta,
            e1,
            e2,
            nt,
            points: Vec::new(),
            projections: Vec::new(),
            d_y: Vec::new(),
            laplacian_d: Vec::new(),
            min_jacobian: f64::INFINITY,
        };
        let ncol = 2 * nt + 1;
        let mut guess = (component, s0);
        for i in 0..=nt {
            for j in 0..ncol {
                let (t, y) = chart.coords(i, j);
                let (p, pr) = chart.locate(domain, t, y, guess)?;
                guess = (pr.component, pr.s);
                let dx = pr.normal.dot(e1);
                chart.min_jacobian = chart.min_jacobian.min(dx);
                chart.points.push(p);
                chart.d_y.push(pr.normal.dot(e2));
                chart.laplacian_d.push(-pr.curvature / (1.0 - t * pr.curvature));
                chart.projections.push(pr);
            }
            guess = (component, s0);
        }
        if chart.min_jacobian < MIN_JACOBIAN {
            return Err(Error::ChartRejected(format!(
                "Jacobian d_X drops to {:.3} inside the chart; shrink theta = {theta}",
                chart.min_jacobian
            )));
        }
        Ok(chart)
    }

    pub fn spacing(&self) -> f64 {
        self.theta / self.nt as f64
    }

    /// Number of Y intervals (2·nt).
    pub fn ny(&self) -> usize {
        2 * self.nt
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.spacing();
        (i as f64 * h, -self.theta + j as f64 * h)
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        i * (2 * self.nt + 1) + j
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        self.points[self.index(i, j)]
    }

    pub fn projection(&self, i: usize, j: usize) -> &Projection {
        &self.projections[self.index(i, j)]
    }

    pub fn d_y(&self, i: usize, j: usize) -> f64 {
        self.d_y[self.index(i, j)]
    }

    pub fn laplacian_d(&self, i: usize, j: usize) -> f64 {
        self.laplacian_d[self.index(i, j)]
    }

    pub fn min_jacobian(&self) -> f64 {
        self.min_jacobian
    }

    /// Local frame coordinates of a physical point.
    pub fn local(&self, p: Point) -> Point {
        let r = p - self.base;
        Point::new(r.dot(self.e1), r.dot(self.e2))
    }

    /// (x, y) ↦ (T, Y).
    pub fn inverse(&self, domain: &Domain2D, p: Point) -> (f64, f64) {
        let pr = domain.project_from(p, self.component, self.s0);
        (pr.distance, self.local(p).y)
    }

    /// (T, Y) ↦ (x, y).
    pub fn map(&self, domain: &Domain2D, t: f64, y: f64) -> Result<Point> {
        Ok(self.locate(domain, t, y, (self.component, self.s0))?.0)
    }

    /// Solves d(base + X e1 + Y e2) = T for X by safeguarded Newton.
    fn locate(&self, domain: &Domain2D, t: f64, y: f64, guess: (usize, f64)) -> Result<(Point, Projection)> {
        let at = |x: f64, g: (usize, f64)| {
            let p = self.base + x * self.e1 + y * self.e2;
            (p, domain.project_from(p, g.0, g.1))
        };
        let mut x = t;
        let (mut p, mut pr) = at(x, guess);
        for _ in 0..100 {
            let f = pr.distance - t;
            let slope = pr.normal.dot(self.e1);
            if !(slope > 1e-3) {
                return Err(Error::ChartRejected(format!(
                    "Jacobian degenerates near (T, Y) = ({t}, {y}); shrink theta = {}",
                    self.theta
                )));
            }
            let step = f / slope;
            x -= step;
            (p, pr) = at(x, (pr.component, pr.s));
            if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        if (pr.distance - t).abs() > 1e-11 {
            return Err(Error::ChartRejected(format!(
                "could not place chart node (T, Y) = ({t}, {y})"
            )));
        }
        Ok((p, pr))
    }
}

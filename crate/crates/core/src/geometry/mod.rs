//! Boundary curves, planar domains, Cartesian grids and collar charts.

mod chart;
mod curve;
mod domain;
mod grid;
mod point;

pub use chart::CollarChart;
pub use curve::{Curve, FourierCurve, PeriodicSpline};
pub use domain::{BoundaryComponent, Domain2D, Projection, Shape, SEED_SAMPLES};
pub use grid::{Cut, Grid, Leg, DIRECTIONS};
pub use point::Point;

/// Curvature of boundary component 0 at parameter `s`.
pub fn curvature(domain: &Domain2D, s: f64) -> crate::Result<f64> {
    domain.curvature(s)
}

/// Signed distance of `p` together with its nearest boundary point and
/// parameter.
pub fn signed_distance(domain: &Domain2D, p: Point) -> (f64, Point, f64) {
    let pr = domain.project(p);
    (pr.distance, pr.point, pr.s)
}

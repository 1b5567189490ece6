//! Closed parametric curves γ(s), s ∈ [0, 1).
//!
//! Every representation provides the point and its first two derivatives
//! with respect to the parameter, which is all the distance and curvature
//! machinery needs.

use super::Point;
use crate::error::{invalid, Result};
use std::f64::consts::TAU;

/// Truncated Fourier series
/// `x(s) = x_cos[0] + Σ_k x_cos[k] cos(2πks) + x_sin[k] sin(2πks)`, same for y.
/// Index 0 of the sine arrays is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    pub x_cos: Vec<f64>,
    pub x_sin: Vec<f64>,
    pub y_cos: Vec<f64>,
    pub y_sin: Vec<f64>,
}

impl FourierCurve {
    pub fn new(x_cos: Vec<f64>, x_sin: Vec<f64>, y_cos: Vec<f64>, y_sin: Vec<f64>) -> Result<Self> {
        if x_cos.is_empty() || y_cos.is_empty() {
            return invalid("fourier curve needs at least the constant coefficients");
        }
        Ok(FourierCurve {
            x_cos,
            x_sin,
            y_cos,
            y_sin,
        })
    }

    fn modes(&self) -> usize {
        self.x_cos
            .len()
            .max(self.x_sin.len())
            .max(self.y_cos.len())
            .max(self.y_sin.len())
    }

    /// Returns the `order`-th derivative (0, 1 or 2).
    fn eval(&self, s: f64, order: u32) -> Point {
        let coef = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        let mut p = if order == 0 {
            Point::new(coef(&self.x_cos, 0), coef(&self.y_cos, 0))
        } else {
            Point::ORIGIN
        };
        for k in 1..self.modes() {
            let w = TAU * k as f64;
            let (sn, cs) = (w * s).sin_cos();
            // d/ds [a cos + b sin] = w(-a sin + b cos); d²/ds² = -w²(a cos + b sin)
            let (c_term, s_term) = match order {
                0 => (cs, sn),
                1 => (-w * sn, w * cs),
                _ => (-w * w * cs, -w * w * sn),
            };
            p.x += coef(&self.x_cos, k) * c_term + coef(&self.x_sin, k) * s_term;
            p.y += coef(&self.y_cos, k) * c_term + coef(&self.y_sin, k) * s_term;
        }
        p
    }
}

/// Periodic cubic spline through control points at uniform parameter values
/// `s_i = i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline {
    points: Vec<Point>,
    /// Second derivatives with respect to s at the knots.
    moments: Vec<Point>,
}

impl PeriodicSpline {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        if n < 4 {
            return invalid("periodic spline needs at least 4 control points");
        }
        for i in 0..n {
            if points[i].dist(points[(i + 1) % n]) == 0.0 {
                return invalid(format!("repeated spline control point at index {i}"));
            }
        }
        let h = 1.0 / n as f64;
        let scale = 6.0 / (h * h);
        let rhs_x: Vec<f64> = (0..n)
            .map(|i| scale * (points[(i + 1) % n].x - 2.0 * points[i].x + points[(i + n - 1) % n].x))
            .collect();
        let rhs_y: Vec<f64> = (0..n)
            .map(|i| scale * (points[(i + 1) % n].y - 2.0 * points[i].y + points[(i + n - 1) % n].y))
            .collect();
        let mx = solve_cyclic_141(&rhs_x);
        let my = solve_cyclic_141(&rhs_y);
        let moments = mx.into_iter().zip(my).map(|(x, y)| Point::new(x, y)).collect();
        Ok(PeriodicSpline { points, moments })
    }

    pub fn control_points(&self) -> &[Point] {
        &self.points
    }

    fn eval(&self, s: f64, order: u32) -> Point {
        let n = self.points.len();
        let nf = n as f64;
        let h = 1.0 / nf;
        let u = s.rem_euclid(1.0) * nf;
        let i = (u.floor() as usize).min(n - 1);
        let t = u - i as f64;
        let j = (i + 1) % n;
        let (p0, p1) = (self.points[i], self.points[j]);
        let (m0, m1) = (self.moments[i], self.moments[j]);
        let a = 1.0 - t;
        match order {
            0 => {
                let c0 = h * h / 6.0 * (a * a * a - a);
                let c1 = h * h / 6.0 * (t * t * t - t);
                a * p0 + t * p1 + c0 * m0 + c1 * m1
            }
            1 => {
                // d/ds = n d/dt
                let c0 = h * h / 6.0 * (-3.0 * a * a + 1.0);
                let c1 = h * h / 6.0 * (3.0 * t * t - 1.0);
                nf * (p1 - p0 + c0 * m0 + c1 * m1)
            }
            _ => a * m0 + t * m1,
        }
    }
}

/// Solves the circulant system `m[i-1] + 4 m[i] + m[i+1] = r[i]`.
///
/// The matrix is strictly diagonally dominant, so Gauss–Seidel converges by a
/// factor of at least 2 per sweep; 200 sweeps reach machine precision.
fn solve_cyclic_141(rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut m: Vec<f64> = rhs.iter().map(|r| r / 6.0).collect();
    for _ in 0..200 {
        let mut change = 0.0f64;
        for i in 0..n {
            let new = (rhs[i] - m[(i + n - 1) % n] - m[(i + 1) % n]) / 4.0;
            change = change.max((new - m[i]).abs());
            m[i] = new;
        }
        let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        if change <= 1e-16 * scale {
            break;
        }
    }
    m
}

/// A closed C² curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Circle { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64 },
    Fourier(FourierCurve),
    Spline(PeriodicSpline),
}

impl Curve {
    pub fn point(&self, s: f64) -> Point {
        self.derivative(s, 0)
    }

    pub fn tangent(&self, s: f64) -> Point {
        self.derivative(s, 1)
    }

    pub fn second(&self, s: f64) -> Point {
        self.derivative(s, 2)
    }

    pub fn derivative(&self, s: f64, order: u32) -> Point {
        match self {
            Curve::Circle { center, radius } => {
                let (sn, cs) = (TAU * s).sin_cos();
                match order {
                    0 => *center + *radius * Point::new(cs, sn),
                    1 => (TAU * radius) * Point::new(-sn, cs),
                    _ => (-TAU * TAU * radius) * Point::new(cs, sn),
                }
            }
            Curve::Ellipse { center, a, b } => {
                let (sn, cs) = (TAU * s).sin_cos();
                match order {
                    0 => *center + Point::new(a * cs, b * sn),
                    1 => TAU * Point::new(-a * sn, b * cs),
                    _ => (-TAU * TAU) * Point::new(a * cs, b * sn),
                }
            }
            Curve::Fourier(f) => f.eval(s, order),
            Curve::Spline(sp) => sp.eval(s, order),
        }
    }

    /// Curvature of the parameterization, positive when the curve turns left.
    pub fn raw_curvature(&self, s: f64) -> (f64, f64) {
        let d1 = self.tangent(s);
        let d2 = self.second(s);
        let speed = d1.norm();
        (d1.cross(d2) / (speed * speed * speed), speed)
    }

    /// Shoelace area of a dense polygonal sampling; positive for a
    /// counterclockwise parameterization.
    pub fn signed_area(&self) -> f64 {
        let n = 4096;
        let pts: Vec<Point> = (0..n).map(|i| self.point(i as f64 / n as f64)).collect();
        0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
    }

    /// Axis-aligned bounding box of a dense sampling, padded by the spline /
    /// series overshoot bound.
    pub fn bounding_box(&self) -> (Point, Point) {
        let n = 4096;
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut max_step = 0.0f64;
        let mut prev = self.point(0.0);
        for i in 0..=n {
            let p = self.point(i as f64 / n as f64);
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            max_step = max_step.max(p.dist(prev));
            prev = p;
        }
        let pad = max_step;
        (lo - Point::new(pad, pad), hi + Point::new(pad, pad))
    }
}

//! Smooth bounded planar domains and nearest-point queries.

use super::{Curve, Point};
use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Number of boundary samples used to seed nearest-point projections.
pub const SEED_SAMPLES: usize = 1024;

const MIN_SPEED: f64 = 1e-12;

/// One closed boundary component, oriented so that the domain lies on its
/// left (`orientation = +1`) or right (`orientation = -1`) as s increases.
#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub curve: Curve,
    pub orientation: f64,
    seeds: Vec<Point>,
}

impl BoundaryComponent {
    fn new(curve: Curve, orientation: f64) -> Self {
        let seeds = (0..SEED_SAMPLES)
            .map(|i| curve.point(i as f64 / SEED_SAMPLES as f64))
            .collect();
        BoundaryComponent {
            curve,
            orientation,
            seeds,
        }
    }

    /// Curvature seen from the domain: positive where the domain is locally
    /// convex.
    pub fn curvature(&self, s: f64) -> Result<f64> {
        let (k, speed) = self.curve.raw_curvature(s);
        if !(speed > MIN_SPEED) {
            return Err(Error::DegenerateTangent { s, speed });
        }
        Ok(self.orientation * k)
    }

    /// Unit normal pointing into the domain.
    pub fn inward_normal(&self, s: f64) -> Point {
        let t = self.curve.tangent(s).normalized();
        self.orientation * t.perp()
    }
}

/// Shape metadata, kept for oracle selection and the domain file.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64 },
    /// `B_{1/r0}(center) \ closure(B_{r0}(center))`, 0 < r0 < 1.
    Annulus { center: Point, r0: f64 },
    Fourier,
    Spline,
    /// The half-plane `{x > 0}` restricted to the box
    /// `[x_min, x_max] × [-half_height, half_height]`; the box edges other
    /// than `x = 0` carry Dirichlet data and are not part of the boundary.
    Strip {
        x_min: f64,
        x_max: f64,
        half_height: f64,
    },
}

/// Result of a nearest-boundary-point query.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// Signed distance, positive inside the domain.
    pub distance: f64,
    /// Nearest boundary point.
    pub point: Point,
    pub component: usize,
    /// Curve parameter of the nearest point.
    pub s: f64,
    /// Inward unit normal at the nearest point (equals ∇d inside the reach).
    pub normal: Point,
    /// Curvature at the nearest point.
    pub curvature: f64,
    /// Set when a second, distinct minimizer is equally close and the query
    /// point lies beyond the reach.
    pub ambiguous: bool,
}

impl Projection {
    /// Δd from the collar identity Δd = -κ / (1 - dκ).
    pub fn laplacian_d(&self) -> f64 {
        -self.curvature / (1.0 - self.distance * self.curvature)
    }
}

#[derive(Debug, Clone)]
pub struct Domain2D {
    shape: Shape,
    components: Vec<BoundaryComponent>,
    reach: f64,
    description: String,
}

impl Domain2D {
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid("circle radius must be positive");
        }
        let comp = BoundaryComponent::new(Curve::Circle { center, radius }, 1.0);
        Self::assemble(
            Shape::Circle { center, radius },
            vec![comp],
            None,
            format!("circle {} {} {}", center.x, center.y, radius),
        )
    }

    pub fn unit_disk() -> Self {
        Self::circle(Point::ORIGIN, 1.0).expect("unit disk is valid")
    }

    pub fn ellipse(center: Point, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return invalid("ellipse semi-axes must be positive");
        }
        let comp = BoundaryComponent::new(Curve::Ellipse { center, a, b }, 1.0);
        Self::assemble(
            Shape::Ellipse { center, a, b },
            vec![comp],
            None,
            format!("ellipse {} {} {} {}", center.x, center.y, a, b),
        )
    }

    pub fn annulus(center: Point, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 < 1.0) {
            return invalid("annulus parameter must satisfy 0 < r0 < 1");
        }
        let outer = BoundaryComponent::new(
            Curve::Circle {
                center,
                radius: 1.0 / r0,
            },
            1.0,
        );
        let inner = BoundaryComponent::new(Curve::Circle { center, radius: r0 }, -1.0);
        Self::assemble(
            Shape::Annulus { center, r0 },
            vec![outer, inner],
            None,
            format!("annulus {} {} {}", center.x, center.y, r0),
        )
    }

    /// Domain bounded by a single closed curve; the orientation is detected
    /// from the signed area.
    pub fn from_curve(curve: Curve, reach_override: Option<f64>) -> Result<Self> {
        let shape = match &curve {
            Curve::Circle { center, radius } => Shape::Circle {
                center: *center,
                radius: *radius,
            },
            Curve::Ellipse { center, a, b } => Shape::Ellipse {
                center: *center,
                a: *a,
                b: *b,
            },
            Curve::Fourier(_) => Shape::Fourier,
            Curve::Spline(_) => Shape::Spline,
        };
        let area = curve.signed_area();
        if area.abs() < 1e-12 {
            return invalid("boundary curve encloses no area");
        }
        let description = format!("{curve:?}");
        let comp = BoundaryComponent::new(curve, area.signum());
        Self::assemble(shape, vec![comp], reach_override, description)
    }

    pub fn strip(x_min: f64, x_max: f64, half_height: f64) -> Result<Self> {
        if !(x_min >= 0.0 && x_max > x_min && half_height > 0.0) {
            return invalid("strip needs 0 <= x_min < x_max and half_height > 0");
        }
        Ok(Domain2D {
            shape: Shape::Strip {
                x_min,
                x_max,
                half_height,
            },
            components: Vec::new(),
            reach: f64::INFINITY,
            description: format!("strip {x_min} {x_max} {half_height}"),
        })
    }

    fn assemble(
        shape: Shape,
        components: Vec<BoundaryComponent>,
        reach_override: Option<f64>,
        description: String,
    ) -> Result<Self> {
        // Regularity check on the seed sampling.
        for comp in &components {
            for i in 0..SEED_SAMPLES {
                let s = i as f64 / SEED_SAMPLES as f64;
                let speed = comp.curve.tangent(s).norm();
                if !(speed > MIN_SPEED) {
                    return Err(Error::DegenerateTangent { s, speed });
                }
            }
        }
        let mut domain = Domain2D {
            shape,
            components,
            reach: f64::INFINITY,
            description,
        };
        domain.reach = match reach_override {
            Some(r) if r > 0.0 => r,
            Some(r) => return invalid(format!("reach override must be positive, got {r}")),
            None => domain.estimate_reach(),
        };
        if !(domain.reach > 0.0 && domain.reach.is_finite()) {
            return invalid("could not estimate a positive reach");
        }
        Ok(domain)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn components(&self) -> &[BoundaryComponent] {
        &self.components
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn is_strip(&self) -> bool {
        matches!(self.shape, Shape::Strip { .. })
    }

    /// Canonical text used for the domain hash in field files.
    pub fn description(&self) -> &str {
        &self.description
    }

    /// FNV-1a hash of the canonical description.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.description.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    /// Signed curvature of boundary component 0 at parameter s.
    pub fn curvature(&self, s: f64) -> Result<f64> {
        self.curvature_on(0, s)
    }

    pub fn curvature_on(&self, component: usize, s: f64) -> Result<f64> {
        match self.components.get(component) {
            Some(c) => c.curvature(s),
            None if self.is_strip() => Ok(0.0),
            None => invalid(format!("no boundary component {component}")),
        }
    }

    pub fn boundary_point(&self, component: usize, s: f64) -> Point {
        match self.components.get(component) {
            Some(c) => c.curve.point(s),
            None => Point::new(0.0, s),
        }
    }

    pub fn inward_normal(&self, component: usize, s: f64) -> Point {
        match self.components.get(component) {
            Some(c) => c.inward_normal(s),
            None => Point::new(1.0, 0.0),
        }
    }

    /// Bounding box of the closure of the domain.
    pub fn bounding_box(&self) -> (Point, Point) {
        if let Shape::Strip {
            x_min,
            x_max,
            half_height,
        } = self.shape
        {
            return (Point::new(x_min, -half_height), Point::new(x_max, half_height));
        }
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.components {
            let (a, b) = c.curve.bounding_box();
            lo = Point::new(lo.x.min(a.x), lo.y.min(a.y));
            hi = Point::new(hi.x.max(b.x), hi.y.max(b.y));
        }
        (lo, hi)
    }

    /// Signed distance to the boundary with the nearest point.
    pub fn project(&self, p: Point) -> Projection {
        if self.is_strip() {
            return Projection {
                distance: p.x,
                point: Point::new(0.0, p.y),
                component: 0,
                s: p.y,
                normal: Point::new(1.0, 0.0),
                curvature: 0.0,
                ambiguous: false,
            };
        }
        let mut best: Option<Projection> = None;
        for (ci, comp) in self.components.iter().enumerate() {
            let cand = project_component(comp, ci, p);
            best = match best {
                None => Some(cand),
                Some(b) => {
                    let (da, db) = (cand.distance.abs(), b.distance.abs());
                    if da < db - 1e-13 * (1.0 + db) {
                        Some(cand)
                    } else if (da - db).abs() <= 1e-13 * (1.0 + db) {
                        Some(Projection {
                            ambiguous: true,
                            ..b
                        })
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let mut out = best.expect("domain has at least one boundary component");
        if out.ambiguous && out.distance.abs() < self.reach {
            out.ambiguous = false;
        }
        out
    }

    /// Convenience accessor for the signed distance only.
    pub fn distance(&self, p: Point) -> f64 {
        self.project(p).distance
    }

    /// Nearest-point projection refined from a known parameter, used when the
    /// caller tracks a point continuously (collar charts).
    pub fn project_from(&self, p: Point, component: usize, s_guess: f64) -> Projection {
        match self.components.get(component) {
            Some(comp) if !matches!(comp.curve, Curve::Circle { .. }) => {
                let s = refine_parameter(comp, p, s_guess);
                finish_projection(comp, component, p, s, false)
            }
            _ => self.project(p),
        }
    }

    /// min(1 / max|κ|, half the shortest double-normal chord), both found by
    /// sampling.
    fn estimate_reach(&self) -> f64 {
        let n = SEED_SAMPLES;
        let mut max_k = 0.0f64;
        let mut samples: Vec<(Point, Point, Point)> = Vec::new(); // (point, unit tangent, unit normal)
        for comp in &self.components {
            for i in 0..n {
                let s = i as f64 / n as f64;
                let (k, _) = comp.curve.raw_curvature(s);
                max_k = max_k.max(k.abs());
                let t = comp.curve.tangent(s).normalized();
                samples.push((comp.curve.point(s), t, t.perp()));
            }
        }
        let curvature_bound = if max_k > 0.0 { 1.0 / max_k } else { f64::INFINITY };

        // A double normal is a chord orthogonal to both tangents.  For each
        // sample i, locate sign changes of (γ_j - γ_i)·t_j along every
        // component and keep the chords that are also orthogonal to t_i.
        let mut min_chord = f64::INFINITY;
        let total = samples.len();
        for i in 0..total {
            let (pi, ti, _) = samples[i];
            for (cj, _) in self.components.iter().enumerate() {
                let base = cj * n;
                for m in 0..n {
                    let j0 = base + m;
                    let j1 = base + (m + 1) % n;
                    if j0 == i || j1 == i {
                        continue;
                    }
                    let (pa, ta, _) = samples[j0];
                    let (pb, tb, _) = samples[j1];
                    let fa = (pa - pi).dot(ta);
                    let fb = (pb - pi).dot(tb);
                    if fa == 0.0 || fa.signum() != fb.signum() {
                        let w = if fa == fb { 0.5 } else { fa / (fa - fb) };
                        let q = pa + w * (pb - pa);
                        let chord = q - pi;
                        let len = chord.norm();
                        // skip the trivial neighbourhood of i on its own component
                        if len < 4.0 * pa.dist(pb) {
                            continue;
                        }
                        if (chord.dot(ti) / len).abs() < 0.02 {
                            min_chord = min_chord.min(len);
                        }
                    }
                }
            }
        }
        curvature_bound.min(0.5 * min_chord)
    }
}

fn project_component(comp: &BoundaryComponent, ci: usize, p: Point) -> Projection {
    if let Curve::Circle { center, radius } = comp.curve {
        let r = p - center;
        let rn = r.norm();
        let (s, ambiguous) = if rn <= 1e-14 * radius {
            (0.0, true)
        } else {
            ((r.y.atan2(r.x) / (2.0 * PI)).rem_euclid(1.0), false)
        };
        return finish_projection(comp, ci, p, s, ambiguous);
    }

    let n = comp.seeds.len();
    let d2: Vec<f64> = comp.seeds.iter().map(|q| (*q - p).norm_sq()).collect();
    let mut best_i = 0;
    for i in 1..n {
        if d2[i] < d2[best_i] {
            best_i = i;
        }
    }
    let s_best = refine_parameter(comp, p, best_i as f64 / n as f64);
    let best_dist = comp.curve.point(s_best).dist(p);

    // Any other discrete local minimum far from the winner that refines to
    // the same distance makes the projection ambiguous.
    let mut ambiguous = false;
    let mut s_out = s_best;
    for i in 0..n {
        let prev = d2[(i + n - 1) % n];
        let next = d2[(i + 1) % n];
        if d2[i] > prev || d2[i] > next {
            continue;
        }
        let gap = ((i as isize - best_i as isize).rem_euclid(n as isize)).min(
            (best_i as isize - i as isize).rem_euclid(n as isize),
        );
        if gap <= 2 {
            continue;
        }
        if d2[i].sqrt() > best_dist + 4.0 * comp.seeds[0].dist(comp.seeds[1]) {
            continue;
        }
        let s_i = refine_parameter(comp, p, i as f64 / n as f64);
        let dist_i = comp.curve.point(s_i).dist(p);
        if (dist_i - best_dist).abs() <= 1e-9 * (1.0 + best_dist) {
            ambiguous = true;
            // tie-break on the smallest parameter
            if s_i < s_out {
                s_out = s_i;
            }
        } else if dist_i < best_dist {
            // the refined winner was not the global minimum after all
            return project_with(comp, ci, p, s_i);
        }
    }
    finish_projection(comp, ci, p, s_out, ambiguous)
}

fn project_with(comp: &BoundaryComponent, ci: usize, p: Point, s: f64) -> Projection {
    finish_projection(comp, ci, p, s, false)
}

fn finish_projection(comp: &BoundaryComponent, ci: usize, p: Point, s: f64, ambiguous: bool) -> Projection {
    let q = comp.curve.point(s);
    let normal = comp.inward_normal(s);
    let dist = q.dist(p);
    let side = (p - q).dot(normal);
    let distance = if side >= 0.0 { dist } else { -dist };
    let (k, _) = comp.curve.raw_curvature(s);
    Projection {
        distance,
        point: q,
        component: ci,
        s: s.rem_euclid(1.0),
        normal,
        curvature: comp.orientation * k,
        ambiguous,
    }
}

/// Safeguarded Newton iteration on the stationarity condition
/// f(s) = (γ(s) - p)·γ'(s) = 0, starting from `s0`.
fn refine_parameter(comp: &BoundaryComponent, p: Point, s0: f64) -> f64 {
    let curve = &comp.curve;
    let ds = 1.0 / comp.seeds.len() as f64;
    let f = |s: f64| (curve.point(s) - p).dot(curve.tangent(s));
    let dist2 = |s: f64| (curve.point(s) - p).norm_sq();

    // Bracket the minimizer between the neighbouring seeds where possible.
    let (mut lo, mut hi) = (s0 - ds, s0 + ds);
    let (flo, fhi) = (f(lo), f(hi));
    let bracketed = flo <= 0.0 && fhi >= 0.0;

    let mut s = s0;
    for _ in 0..60 {
        let fs = f(s);
        let g = curve.tangent(s);
        let fp = g.norm_sq() + (curve.point(s) - p).dot(curve.second(s));
        let mut next = if fp > 0.0 { s - fs / fp } else { f64::NAN };
        if bracketed {
            if fs < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
        } else if !next.is_finite() || (next - s).abs() > ds {
            // damped step towards decreasing distance
            let step = -fs.signum() * ds * 0.5;
            let mut t = 1.0;
            next = s + step;
            while dist2(next) > dist2(s) && t > 1e-6 {
                t *= 0.5;
                next = s + t * step;
            }
        }
        let done = (next - s).abs() <= 1e-15 * (1.0 + s.abs());
        s = next;
        if done {
            break;
        }
    }
    s
}

//! Node-aligned Cartesian grids over a domain or its trimmed subdomain
//! `{d > trim}`, with Shortley–Weller cut legs at the region boundary.

use super::{Domain2D, Point, Projection, Shape};
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Neighbour offsets in the order east, west, north, south.
pub const DIRECTIONS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Nodes closer than this fraction of a cell to the region boundary are
/// treated as boundary nodes, which keeps cut fractions away from zero.
const BOUNDARY_SNAP: f64 = 1e-6;

/// Where a stencil leg ends: at another unknown or at a cut point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leg {
    Node(usize),
    Cut(usize),
}

/// Intersection of a leg with the region boundary.
#[derive(Debug, Clone, Copy)]
pub struct Cut {
    /// Fraction of the grid spacing, in (0, 1].
    pub frac: f64,
    pub point: Point,
    /// Projection of the cut point onto ∂Ω.
    pub projection: Projection,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub origin: Point,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub trim: f64,
    pub domain_hash: u64,
    projections: Vec<Projection>,
    laplacian_d: Vec<f64>,
    unknown_of_node: Vec<usize>,
    node_of_unknown: Vec<usize>,
    legs: Vec<[Leg; 4]>,
    cuts: Vec<Cut>,
}

const NONE: usize = usize::MAX;

impl Grid {
    /// Builds the grid of nodes with `d > trim`.  The origin is a multiple
    /// of the spacing so that grids of the same spacing on nested domains
    /// share nodes.
    pub fn build(domain: &Domain2D, spacing: f64, trim: f64) -> Result<Grid> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing}")));
        }
        if !(trim >= 0.0) {
            return Err(Error::InvalidInput(format!("trim must be nonnegative, got {trim}")));
        }
        let (lo, hi) = domain.bounding_box();
        let i0 = (lo.x / spacing).floor() as i64 - 1;
        let j0 = (lo.y / spacing).floor() as i64 - 1;
        let i1 = (hi.x / spacing).ceil() as i64 + 1;
        let j1 = (hi.y / spacing).ceil() as i64 + 1;
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        let origin = Point::new(i0 as f64 * spacing, j0 as f64 * spacing);
        let point = |k: usize| {
            Point::new(
                origin.x + (k % nx) as f64 * spacing,
                origin.y + (k / nx) as f64 * spacing,
            )
        };

        let projections: Vec<Projection> = (0..nx * ny)
            .into_par_iter()
            .map(|k| domain.project(point(k)))
            .collect();

        let threshold = trim + BOUNDARY_SNAP * spacing;
        let inside = |k: usize| -> bool {
            let p = point(k);
            projections[k].distance > threshold && in_box(domain, p)
        };

        let mut unknown_of_node = vec![NONE; nx * ny];
        let mut node_of_unknown = Vec::new();
        for k in 0..nx * ny {
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                continue;
            }
            if inside(k) {
                unknown_of_node[k] = node_of_unknown.len();
                node_of_unknown.push(k);
            }
        }
        if node_of_unknown.is_empty() {
            return Err(Error::EmptyGrid { spacing, trim });
        }

        // Cut legs, located per unknown in a fixed order.
        let per_unknown: Vec<Vec<(usize, Cut)>> = node_of_unknown
            .par_iter()
            .map(|&k| {
                let mut out = Vec::new();
                for (dir, &(di, dj)) in DIRECTIONS.iter().enumerate() {
                    let nb = (k as isize + di + dj * nx as isize) as usize;
                    if unknown_of_node[nb] == NONE {
                        let e = Point::new(di as f64, dj as f64);
                        out.push((dir, locate_cut(domain, point(k), e, spacing, trim, &projections[k])));
                    }
                }
                out
            })
            .collect();

        let mut legs = Vec::with_capacity(node_of_unknown.len());
        let mut cuts = Vec::new();
        for (u, &k) in node_of_unknown.iter().enumerate() {
            let mut row = [Leg::Node(0); 4];
            for (dir, &(di, dj)) in DIRECTIONS.iter().enumerate() {
                let nb = (k as isize + di + dj * nx as isize) as usize;
                row[dir] = Leg::Node(unknown_of_node[nb]);
            }
            for &(dir, cut) in &per_unknown[u] {
                row[dir] = Leg::Cut(cuts.len());
                cuts.push(cut);
            }
            legs.push(row);
        }

        let reach = domain.reach();
        let laplacian_d = projections
            .iter()
            .map(|p| {
                if p.distance.abs() < reach {
                    p.laplacian_d()
                } else {
                    f64::NAN
                }
            })
            .collect();

        Ok(Grid {
            origin,
            spacing,
            nx,
            ny,
            trim,
            domain_hash: domain.hash(),
            projections,
            laplacian_d,
            unknown_of_node,
            node_of_unknown,
            legs,
            cuts,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_unknowns(&self) -> usize {
        self.node_of_unknown.len()
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node_point(&self, k: usize) -> Point {
        Point::new(
            self.origin.x + (k % self.nx) as f64 * self.spacing,
            self.origin.y + (k / self.nx) as f64 * self.spacing,
        )
    }

    /// Index of the node at `p` when `p` is (numerically) a grid node.
    pub fn node_at(&self, p: Point) -> Option<usize> {
        let fi = (p.x - self.origin.x) / self.spacing;
        let fj = (p.y - self.origin.y) / self.spacing;
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-6 || (fj - j).abs() > 1e-6 || i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        (i < self.nx && j < self.ny).then(|| self.node_index(i, j))
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.unknown_of_node[k] != NONE
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        self.unknown_of_node.iter().map(|&u| u != NONE).collect()
    }

    pub fn unknown_of_node(&self, k: usize) -> Option<usize> {
        let u = self.unknown_of_node[k];
        (u != NONE).then_some(u)
    }

    pub fn node_of_unknown(&self, u: usize) -> usize {
        self.node_of_unknown[u]
    }

    pub fn unknown_nodes(&self) -> &[usize] {
        &self.node_of_unknown
    }

    pub fn legs(&self, u: usize) -> &[Leg; 4] {
        &self.legs[u]
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn projection(&self, k: usize) -> &Projection {
        &self.projections[k]
    }

    pub fn distance(&self, k: usize) -> f64 {
        self.projections[k].distance
    }

    /// ∇d at node `k` (the inward normal at the nearest boundary point).
    pub fn distance_gradient(&self, k: usize) -> Point {
        self.projections[k].normal
    }

    /// Δd at node `k`, NaN beyond the reach.
    pub fn laplacian_d(&self, k: usize) -> f64 {
        self.laplacian_d[k]
    }

    /// Leg lengths (as fractions of the spacing) of unknown `u` in the
    /// order east, west, north, south.
    pub fn leg_fractions(&self, u: usize) -> [f64; 4] {
        let mut f = [1.0; 4];
        for (dir, leg) in self.legs[u].iter().enumerate() {
            if let Leg::Cut(c) = leg {
                f[dir] = self.cuts[*c].frac;
            }
        }
        f
    }
}

fn in_box(domain: &Domain2D, p: Point) -> bool {
    match *domain.shape() {
        Shape::Strip {
            x_min,
            x_max,
            half_height,
        } => p.x > x_min && p.x < x_max && p.y.abs() < half_height,
        _ => true,
    }
}

/// Finds the fraction θ ∈ (0, 1] at which the leg from `p` along `e` leaves
/// the region.
fn locate_cut(domain: &Domain2D, p: Point, e: Point, h: f64, trim: f64, proj_p: &Projection) -> Cut {
    // Box edges of the flat test geometry.
    if let Shape::Strip {
        x_min,
        x_max,
        half_height,
    } = *domain.shape()
    {
        let mut frac = 1.0f64;
        if e.x > 0.0 {
            frac = frac.min((x_max - p.x) / h);
        }
        if e.x < 0.0 {
            frac = frac.min((p.x - x_min.max(trim)) / h);
        }
        if e.y > 0.0 {
            frac = frac.min((half_height - p.y) / h);
        }
        if e.y < 0.0 {
            frac = frac.min((p.y + half_height) / h);
        }
        let q = p + (frac * h) * e;
        return Cut {
            frac,
            point: q,
            projection: domain.project(q),
        };
    }

    let g = |pr: &Projection| pr.distance - trim;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g_lo = g(proj_p);
    let q_hi = p + h * e;
    let pr_hi = domain.project(q_hi);
    let g_hi = g(&pr_hi);
    let mut t = if g_lo - g_hi > 0.0 {
        (g_lo / (g_lo - g_hi)).clamp(1e-12, 1.0)
    } else {
        0.5
    };
    let mut pr = domain.project_from(p + (t * h) * e, proj_p.component, proj_p.s);
    for _ in 0..60 {
        let gv = g(&pr);
        if gv > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = h * pr.normal.dot(e);
        let mut next = if slope < 0.0 { t - gv / slope } else { f64::NAN };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 {
            t = next;
            break;
        }
        t = next;
        pr = domain.project_from(p + (t * h) * e, pr.component, pr.s);
    }
    let t = t.clamp(f64::MIN_POSITIVE, 1.0);
    let q = p + (t * h) * e;
    Cut {
        frac: t,
        point: q,
        projection: domain.project(q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn coarse_unit_disk_mask() {
        let d = Domain2D::unit_disk();
        let g = Grid::build(&d, 0.5, 0.0).unwrap();
        let center = g.node_at(Point::new(0.0, 0.0)).unwrap();
        assert!(g.is_interior(center));
        let far = g.node_at(Point::new(1.5, 0.0)).unwrap();
        assert!(!g.is_interior(far));
    }

    #[test]
    fn interior_count_matches_area() {
        let h = 1.0 / 64.0;
        let g = Grid::build(&Domain2D::unit_disk(), h, 0.0).unwrap();
        let expected = PI / (h * h);
        let rel = (g.num_unknowns() as f64 - expected).abs() / expected;
        assert!(rel < 0.02, "count {} vs {expected}", g.num_unknowns());
    }

    #[test]
    fn trimmed_nodes_lie_inside_level_set() {
        let h = 1.0 / 32.0;
        let g = Grid::build(&Domain2D::unit_disk(), h, 0.1).unwrap();
        for &k in g.unknown_nodes() {
            assert!(g.node_point(k).norm_sq() < 0.81 + 2.0 * h);
        }
    }

    #[test]
    fn cut_points_lie_on_level_set() {
        let trim = 0.05;
        let d = Domain2D::ellipse(Point::ORIGIN, 2.0, 1.0).unwrap();
        let g = Grid::build(&d, 1.0 / 16.0, trim).unwrap();
        assert!(!g.cuts().is_empty());
        for c in g.cuts() {
            assert!(c.frac > 0.0 && c.frac <= 1.0);
            assert!((c.projection.distance - trim).abs() < 1e-11);
        }
    }

    #[test]
    fn unit_gradient_in_collar() {
        let g = Grid::build(&Domain2D::unit_disk(), 1.0 / 32.0, 0.0).unwrap();
        for &k in g.unknown_nodes() {
            if g.distance(k) < 0.9 {
                assert!((g.distance_gradient(k).norm() - 1.0).abs() < 1e-12);
                let r = g.node_point(k).norm();
                let exact = -1.0 / r;
                assert!((g.laplacian_d(k) - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grids_on_nested_domains_share_nodes() {
        let h = 1.0 / 16.0;
        let a = Grid::build(&Domain2D::unit_disk(), h, 0.0).unwrap();
        let b = Grid::build(&Domain2D::ellipse(Point::ORIGIN, 2.0, 1.0).unwrap(), h, 0.0).unwrap();
        for &k in a.unknown_nodes() {
            let p = a.node_point(k);
            let kb = b.node_at(p).expect("shared node");
            assert!(b.is_interior(kb));
        }
    }

    #[test]
    fn strip_grid_box_legs() {
        let d = Domain2D::strip(0.0, 1.0, 0.5).unwrap();
        let g = Grid::build(&d, 0.125, 0.25).unwrap();
        for &k in g.unknown_nodes() {
            let p = g.node_point(k);
            assert!(p.x > 0.25 && p.x < 1.0 && p.y.abs() < 0.5);
        }
        for c in g.cuts() {
            assert!((c.frac - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_grid_without_interior_nodes_is_rejected() {
        let d = Domain2D::circle(Point::new(0.5, 0.5), 0.1).unwrap();
        assert!(matches!(Grid::build(&d, 1.0, 0.0), Err(Error::EmptyGrid { .. })));
    }
}

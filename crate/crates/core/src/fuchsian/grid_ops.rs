//! The renormalized unknown w = (v − 2d)/d² and the Fuchsian operators L
//! and M_w on Cartesian grids.

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::geometry::{Grid, Point};

/// w = (v − 2d)/d² at interior nodes with d ≥ h_grid; other nodes masked.
pub fn renormalize(v: &GridField, grid: &Grid) -> GridField {
    let mut w = GridField::masked(grid);
    for &k in grid.unknown_nodes() {
        let d = grid.distance(k);
        let vk = v.values[k];
        if d >= grid.spacing && vk.is_finite() {
            w.values[k] = (vk - 2.0 * d) / (d * d);
        }
    }
    w
}

/// v = e^{−u}.
pub fn hyperbolic_radius(u: &GridField) -> GridField {
    u.map(|x| (-x).exp())
}

/// Central-difference gradient and five-point Laplacian of `f` at node `k`,
/// or `None` when a neighbour is masked.
pub(crate) fn local_derivatives(f: &GridField, k: usize) -> Option<(f64, Point, f64)> {
    let (i, j) = (k % f.nx, k / f.nx);
    if i == 0 || j == 0 || i + 1 >= f.nx || j + 1 >= f.ny {
        return None;
    }
    let c = f.values[k];
    let e = f.get(i + 1, j);
    let w = f.get(i - 1, j);
    let n = f.get(i, j + 1);
    let s = f.get(i, j - 1);
    if ![c, e, w, n, s].iter().all(|v| v.is_finite()) {
        return None;
    }
    let h = f.spacing;
    let grad = Point::new((e - w) / (2.0 * h), (n - s) / (2.0 * h));
    let lap = (e + w + n + s - 4.0 * c) / (h * h);
    Some((c, grad, lap))
}

/// L f = d²Δf + 2d ∇d·∇f − 2f at nodes whose stencil is available.
pub fn apply_l(f: &GridField, grid: &Grid) -> GridField {
    let mut out = GridField::masked(grid);
    for &k in grid.unknown_nodes() {
        if let Some((c, grad, lap)) = local_derivatives(f, k) {
            let d = grid.distance(k);
            out.values[k] = d * d * lap + 2.0 * d * grid.distance_gradient(k).dot(grad) - 2.0 * c;
        }
    }
    out
}

/// M_w(f) = d²/(2 + dw)·[2f ∇w·∇d + d ∇w·∇f] − 2d f Δd.
pub fn apply_mw(w: &GridField, f: &GridField, grid: &Grid) -> Result<GridField> {
    let mut out = GridField::masked(grid);
    for &k in grid.unknown_nodes() {
        let (Some((wc, gw, _)), Some((fc, gf, _))) = (local_derivatives(w, k), local_derivatives(f, k)) else {
            continue;
        };
        let d = grid.distance(k);
        let denom = 2.0 + d * wc;
        if !(denom > 0.0) {
            return Err(Error::Positivity(format!(
                "2 + dw = {denom:e} at node {k}; v is not positive there"
            )));
        }
        let nd = grid.distance_gradient(k);
        out.values[k] = d * d / denom * (2.0 * fc * gw.dot(nd) + d * gw.dot(gf)) - 2.0 * d * fc * grid.laplacian_d(k);
    }
    Ok(out)
}

/// L w + 2Δd − M_w(w), which vanishes for the exact renormalized unknown.
pub fn fuchsian_residual(w: &GridField, grid: &Grid) -> Result<GridField> {
    let lw = apply_l(w, grid);
    let mw = apply_mw(w, w, grid)?;
    let mut out = GridField::masked(grid);
    for &k in grid.unknown_nodes() {
        out.values[k] = lw.values[k] + 2.0 * grid.laplacian_d(k) - mw.values[k];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain2D;
    use crate::oracles::RadialOracle;

    #[test]
    fn disk_oracle_gives_constant_w() {
        let dom = Domain2D::circle(Point::ORIGIN, 2.0).unwrap();
        let g = Grid::build(&dom, 1.0 / 16.0, 0.0).unwrap();
        let o = RadialOracle::for_domain(&dom).unwrap();
        let v = GridField::from_fn(&g, |_, p| o.v(p).unwrap());
        let w = renormalize(&v, &g);
        let mut count = 0;
        for (k, x) in w.values.iter().enumerate() {
            if x.is_finite() {
                count += 1;
                assert!((x + 0.5).abs() < 1e-11, "node {k}: {x}");
            }
        }
        assert!(count > 100);
    }

    #[test]
    fn flat_profile_gives_zero_w() {
        let dom = Domain2D::strip(0.0, 1.0, 0.5).unwrap();
        let g = Grid::build(&dom, 0.125, 0.0).unwrap();
        let v = GridField::from_fn(&g, |_, p| 2.0 * p.x);
        assert_eq!(renormalize(&v, &g).sup_norm_where(|_| true), 0.0);
    }

    #[test]
    fn flat_monomials() {
        let dom = Domain2D::strip(0.0, 2.0, 1.0).unwrap();
        let g = Grid::build(&dom, 1.0 / 16.0, 0.0).unwrap();
        let lin = apply_l(&GridField::from_fn(&g, |_, p| p.x), &g);
        let quad = apply_l(&GridField::from_fn(&g, |_, p| p.x * p.x), &g);
        for &k in g.unknown_nodes() {
            let x = g.node_point(k).x;
            if lin.values[k].is_finite() {
                assert!(lin.values[k].abs() < 1e-12);
                assert!((quad.values[k] - 4.0 * x * x).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn disk_constant_w() {
        let r0 = 1.0;
        let dom = Domain2D::unit_disk();
        let g = Grid::build(&dom, 1.0 / 16.0, 0.0).unwrap();
        let w = GridField::from_fn(&g, |_, _| -1.0 / r0);
        let lw = apply_l(&w, &g);
        let mw = apply_mw(&w, &w, &g).unwrap();
        for &k in g.unknown_nodes() {
            if !lw.values[k].is_finite() || g.distance(k) > 0.9 {
                continue;
            }
            let d = g.distance(k);
            assert!((lw.values[k] - 2.0 / r0).abs() < 1e-12);
            let kappa = 1.0 / r0;
            assert!((mw.values[k] + 2.0 * d / r0 * kappa / (1.0 - d * kappa)).abs() < 1e-12);
            assert!((lw.values[k] + 2.0 * g.laplacian_d(k) - mw.values[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn constant_w_on_flat_boundary_has_no_mw() {
        let dom = Domain2D::strip(0.0, 1.0, 0.5).unwrap();
        let g = Grid::build(&dom, 0.125, 0.0).unwrap();
        let w = GridField::from_fn(&g, |_, _| 0.7);
        let f = GridField::from_fn(&g, |_, p| p.x * p.y);
        let m = apply_mw(&w, &f, &g).unwrap();
        assert_eq!(m.sup_norm_where(|_| true), 0.0);
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        let dom = Domain2D::unit_disk();
        let g = Grid::build(&dom, 0.125, 0.0).unwrap();
        let w = GridField::from_fn(&g, |_, _| -100.0);
        assert!(matches!(apply_mw(&w, &w, &g), Err(Error::Positivity(_))));
    }
}

//! Closed-form hyperbolic radii of disks and annuli.

use crate::error::{invalid, Result};
use crate::geometry::{Domain2D, Point, Shape};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKind {
    Disk,
    /// `r0 < |p − center| < 1/r0`.
    Annulus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOracle {
    pub kind: OracleKind,
    pub r0: f64,
    pub center: Point,
}

impl RadialOracle {
    pub fn disk(center: Point, r0: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return invalid("disk radius must be positive");
        }
        Ok(RadialOracle {
            kind: OracleKind::Disk,
            r0,
            center,
        })
    }

    pub fn annulus(center: Point, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 < 1.0) {
            return invalid("annulus needs 0 < r0 < 1");
        }
        Ok(RadialOracle {
            kind: OracleKind::Annulus,
            r0,
            center,
        })
    }

    /// The oracle matching a circle or annulus domain.
    pub fn for_domain(domain: &Domain2D) -> Result<Self> {
        match *domain.shape() {
            Shape::Circle { center, radius } => Self::disk(center, radius),
            Shape::Annulus { center, r0 } => Self::annulus(center, r0),
            _ => invalid("exact solutions exist only for circle and annulus domains"),
        }
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let ok = match self.kind {
            OracleKind::Disk => r < self.r0,
            OracleKind::Annulus => r > self.r0 && r < 1.0 / self.r0,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("radius {r} lies outside the oracle domain"))
        }
    }

    /// Hyperbolic radius as a function of the distance to the center.
    pub fn v_radial(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.v_radial_unchecked(r))
    }

    /// Formula value without the domain check (used for boundary values).
    pub fn v_radial_unchecked(&self, r: f64) -> f64 {
        match self.kind {
            OracleKind::Disk => self.r0 - r * r / self.r0,
            OracleKind::Annulus => {
                let l = self.r0.ln();
                4.0 / PI * l.abs() * (PI / (2.0 * l) * r.ln()).cos() * r
            }
        }
    }

    /// dv/dr.
    pub fn dv_radial(&self, r: f64) -> f64 {
        match self.kind {
            OracleKind::Disk => -2.0 * r / self.r0,
            OracleKind::Annulus => {
                let l = self.r0.ln();
                let a = PI / (2.0 * l);
                let c = 4.0 / PI * l.abs();
                c * ((a * r.ln()).cos() - a * (a * r.ln()).sin())
            }
        }
    }

    /// Δv = v'' + v'/r.
    pub fn laplacian_v(&self, r: f64) -> f64 {
        match self.kind {
            OracleKind::Disk => -4.0 / self.r0,
            OracleKind::Annulus => {
                let l = self.r0.ln();
                let a = PI / (2.0 * l);
                let c = 4.0 / PI * l.abs();
                let x = a * r.ln();
                // v' = c (cos x − a sin x); v'' = −c a (sin x + a cos x)/r
                let vpp = -c * a * (x.sin() + a * x.cos()) / r;
                vpp + self.dv_radial(r) / r
            }
        }
    }

    pub fn radius_of(&self, p: Point) -> f64 {
        p.dist(self.center)
    }

    pub fn v(&self, p: Point) -> Result<f64> {
        self.v_radial(self.radius_of(p))
    }

    pub fn u(&self, p: Point) -> Result<f64> {
        Ok(-self.v(p)?.ln())
    }

    pub fn gradient_v(&self, p: Point) -> Point {
        let r = self.radius_of(p);
        if r == 0.0 {
            return Point::ORIGIN;
        }
        (self.dv_radial(r) / r) * (p - self.center)
    }

    /// −Δu + 4e^{2u} for u = −ln v, by fourth-order central differences in
    /// r with the given step.
    pub fn radial_residual(&self, r: f64, step: f64) -> Result<f64> {
        self.check_radius(r - 2.0 * step)?;
        self.check_radius(r + 2.0 * step)?;
        let u = |s: f64| -self.v_radial_unchecked(s).ln();
        let (um2, um, u0, up, up2) = (u(r - 2.0 * step), u(r - step), u(r), u(r + step), u(r + 2.0 * step));
        let upp = (-up2 + 16.0 * up - 30.0 * u0 + 16.0 * um - um2) / (12.0 * step * step);
        let up1 = (-up2 + 8.0 * up - 8.0 * um + um2) / (12.0 * step);
        Ok(-(upp + up1 / r) + 4.0 * (2.0 * u0).exp())
    }
}

/// `v = r0 − r²/r0` on the disk of radius `r0` centered at `center`.
pub fn disk_radius(oracle: &RadialOracle, p: Point) -> Result<f64> {
    if oracle.kind != OracleKind::Disk {
        return invalid("not a disk oracle");
    }
    oracle.v(p)
}

/// `v = (4/π)|ln r0| cos(π ln r′ / (2 ln r0)) r′` on the annulus.
pub fn annulus_radius(oracle: &RadialOracle, p: Point) -> Result<f64> {
    if oracle.kind != OracleKind::Annulus {
        return invalid("not an annulus oracle");
    }
    oracle.v(p)
}

pub fn oracle_u(oracle: &RadialOracle, p: Point) -> Result<f64> {
    oracle.u(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> RadialOracle {
        RadialOracle::disk(Point::ORIGIN, 1.0).unwrap()
    }

    #[test]
    fn disk_values() {
        assert_eq!(disk_radius(&unit(), Point::ORIGIN).unwrap(), 1.0);
        assert_eq!(disk_radius(&unit(), Point::new(0.5, 0.0)).unwrap(), 0.75);
        assert_eq!(oracle_u(&unit(), Point::ORIGIN).unwrap(), 0.0);
        assert_abs_diff_eq!(oracle_u(&unit(), Point::new(0.0, 0.5)).unwrap(), -(0.75f64.ln()), epsilon = 1e-15);
        assert!(disk_radius(&unit(), Point::new(1.2, 0.0)).is_err());
    }

    #[test]
    fn disk_expansion_is_exact() {
        let o = RadialOracle::disk(Point::ORIGIN, 2.0).unwrap();
        for k in 1..20 {
            let d = k as f64 * 0.05;
            let v = o.v_radial(2.0 - d).unwrap();
            assert_abs_diff_eq!(v, 2.0 * d - d * d / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn u_plus_log_two_d_bounded() {
        let o = unit();
        for k in 1..=8 {
            let d = 10f64.powi(-k);
            let u = o.u(Point::new(1.0 - d, 0.0)).unwrap();
            assert!((u + (2.0 * d).ln()).abs() < 1.0);
        }
    }

    #[test]
    fn annulus_boundary_and_midpoint() {
        let r0 = 0.4f64;
        let o = RadialOracle::annulus(Point::ORIGIN, r0).unwrap();
        assert!(o.v_radial_unchecked(r0).abs() < 1e-12);
        assert!(o.v_radial_unchecked(1.0 / r0).abs() < 1e-12);
        assert_abs_diff_eq!(o.v_radial(1.0).unwrap(), 4.0 / PI * r0.ln().abs(), epsilon = 1e-15);
        for k in 1..50 {
            let r = r0 + (1.0 / r0 - r0) * k as f64 / 50.0;
            assert!(o.v_radial(r).unwrap() > 0.0);
        }
        assert!(o.v_radial(0.3).is_err());
    }

    #[test]
    fn radial_residuals_vanish() {
        let disk = RadialOracle::disk(Point::ORIGIN, 1.5).unwrap();
        let ann = RadialOracle::annulus(Point::ORIGIN, 0.3).unwrap();
        for k in 1..20 {
            let r = 1.5 * k as f64 / 20.0;
            assert!(disk.radial_residual(r, 1e-4).unwrap().abs() < 1e-6);
            let r = 0.3 + (1.0 / 0.3 - 0.3) * k as f64 / 20.0;
            assert!(ann.radial_residual(r, 1e-4).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn hyperbolic_radius_identity() {
        for o in [
            RadialOracle::disk(Point::ORIGIN, 1.0).unwrap(),
            RadialOracle::annulus(Point::ORIGIN, 0.5).unwrap(),
        ] {
            let (lo, hi) = match o.kind {
                OracleKind::Disk => (0.0, 1.0),
                OracleKind::Annulus => (0.5, 2.0),
            };
            for k in 1..10 {
                let r = lo + (hi - lo) * k as f64 / 10.0;
                let v = o.v_radial(r).unwrap();
                let g = o.dv_radial(r);
                assert_abs_diff_eq!(v * o.laplacian_v(r), g * g - 4.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn v_over_d_tends_to_two() {
        let o = RadialOracle::annulus(Point::ORIGIN, 0.5).unwrap();
        let d = 1e-7;
        assert!((o.v_radial(0.5 + d).unwrap() / d - 2.0).abs() < 1e-5);
        assert!((o.v_radial(2.0 - d).unwrap() / d - 2.0).abs() < 1e-5);
    }
}

//! C⁴ transition 0 → 1 on [0, 1] (degree-9 smoothstep) and its derivatives.
//! Four continuous derivatives keep second-order stencils applied to
//! blended coefficients free of kinks.

#[inline]
pub fn step(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s.powi(5) * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + 70.0 * s))))
}

#[inline]
pub fn step_d1(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    630.0 * (s * (1.0 - s)).powi(4)
}

#[inline]
pub fn step_d2(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    2520.0 * (s * (1.0 - s)).powi(3) * (1.0 - 2.0 * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_symmetry() {
        assert_eq!(step(0.0), 0.0);
        assert_eq!(step(1.0), 1.0);
        assert!((step(0.5) - 0.5).abs() < 1e-15);
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            assert!((step(s) + step(1.0 - s) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let e = 1e-5;
        for k in 1..20 {
            let s = k as f64 / 20.0;
            let d1 = (step(s + e) - step(s - e)) / (2.0 * e);
            let d2 = (step_d1(s + e) - step_d1(s - e)) / (2.0 * e);
            assert!((d1 - step_d1(s)).abs() < 1e-6, "{s}");
            assert!((d2 - step_d2(s)).abs() < 1e-5, "{s}");
        }
    }
}

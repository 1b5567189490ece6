//! Boundary asymptotics of computed fields: expansion fits along inward
//! normals, the gradient limit |∇v| → 2, the logarithmic ratio, the
//! identity vΔv = |∇v|² − 4 and refinement studies.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::GridField;
use crate::fuchsian::grid_ops::local_derivatives;
use crate::geometry::{Domain2D, Grid, Point, Shape};

/// Samples per normal line in a fit window.
pub const FIT_SAMPLES: usize = 40;
/// Minimum number of usable samples for a fit.
pub const MIN_FIT_SAMPLES: usize = 8;
/// Largest admissible d in the logarithmic ratio check (2d ≤ 0.4).
pub const LOG_RATIO_MAX_D: f64 = 0.2;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Probe {
    pub component: usize,
    pub s: f64,
    pub point: Point,
    pub normal: Point,
    pub curvature: f64,
}

impl Probe {
    pub fn at(domain: &Domain2D, component: usize, s: f64) -> Result<Self> {
        Ok(Probe {
            component,
            s,
            point: domain.boundary_point(component, s),
            normal: domain.inward_normal(component, s),
            curvature: domain.curvature_on(component, s)?,
        })
    }

    pub fn along(&self, d: f64) -> Point {
        self.point + self.normal * d
    }
}

/// `count` probes equally spaced in the curve parameter of component 0.
pub fn probes(domain: &Domain2D, count: usize) -> Result<Vec<Probe>> {
    let params: Vec<f64> = match domain.shape() {
        Shape::Strip { half_height, .. } => (0..count)
            .map(|k| (k as f64 / count as f64 - 0.5) * half_height)
            .collect(),
        _ => (0..count).map(|k| k as f64 / count as f64).collect(),
    };
    params.into_iter().map(|s| Probe::at(domain, 0, s)).collect()
}

/// Interpolant of a hyperbolic-radius field through the bounded quantity
/// φ = −ln(v / 2d), so that v = 2d e^{−φ} with the exact distance.
pub struct RadiusSampler<'a> {
    domain: &'a Domain2D,
    phi: GridField,
}

impl<'a> RadiusSampler<'a> {
    pub fn from_v(v: &GridField, domain: &'a Domain2D) -> Self {
        let mut phi = v.clone();
        for (k, x) in phi.values.iter_mut().enumerate() {
            let d = domain.distance(v.node_point(k));
            *x = if x.is_finite() && *x > 0.0 && d > 0.0 {
                -(*x / (2.0 * d)).ln()
            } else {
                f64::NAN
            };
        }
        RadiusSampler { domain, phi }
    }

    pub fn from_u(u: &GridField, domain: &'a Domain2D) -> Self {
        Self::from_v(&u.map(|x| (-x).exp()), domain)
    }

    pub fn v(&self, p: Point) -> f64 {
        let d = self.domain.distance(p);
        2.0 * d * (-self.phi.sample(p)).exp()
    }

    pub fn u(&self, p: Point) -> f64 {
        let d = self.domain.distance(p);
        self.phi.sample(p) - (2.0 * d).ln()
    }

    /// ∇v = e^{−φ}(2∇d − 2d∇φ).
    pub fn gradient_v(&self, p: Point) -> Option<Point> {
        let pr = self.domain.project(p);
        let g = self.phi.sample_gradient(p)?;
        let e = (-self.phi.sample(p)).exp();
        let out = (pr.normal * 2.0 - g * (2.0 * pr.distance)) * e;
        (out.x.is_finite() && out.y.is_finite()).then_some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitBasis {
    /// c₁d + c₂d²
    Quadratic,
    /// c₁d + c₂d² + c₃d³
    Cubic,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeFit {
    pub probe: Probe,
    pub c1: f64,
    pub c2: f64,
    /// RMS misfit over the samples.
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionFit {
    pub window: (f64, f64),
    pub basis: FitBasis,
    pub fits: Vec<ProbeFit>,
}

impl ExpansionFit {
    /// max |c₂ + κ| / |κ| over probes with κ ≠ 0.
    pub fn max_relative_c2_error(&self) -> f64 {
        self.fits
            .iter()
            .filter(|f| f.probe.curvature != 0.0)
            .map(|f| ((f.c2 + f.probe.curvature) / f.probe.curvature).abs())
            .fold(0.0, f64::max)
    }
}

/// Least squares via Householder QR on a small dense system.
fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let n = rows[0].len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InsufficientSamples("rank-deficient fit".into()));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vv;
            for i in k..m {
                a[i][j] -= s * v[i - k];
            }
        }
        let s: f64 = (k..m).map(|i| v[i - k] * b[i]).sum::<f64>() * 2.0 / vv;
        for i in k..m {
            b[i] -= s * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

/// Fits v(q + d n) ≈ c₁d + c₂d² (+ c₃d³) on `FIT_SAMPLES` equally spaced
/// d in `window` along each probe normal.
pub fn fit_expansion_with(
    sample_v: impl Fn(Point) -> f64,
    probes: &[Probe],
    window: (f64, f64),
    basis: FitBasis,
) -> Result<ExpansionFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return invalid(format!("fit window ({lo}, {hi}) is empty"));
    }
    let nb = match basis {
        FitBasis::Quadratic => 2,
        FitBasis::Cubic => 3,
    };
    let mut fits = Vec::with_capacity(probes.len());
    for probe in probes {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for q in 0..FIT_SAMPLES {
            let d = lo + (hi - lo) * q as f64 / (FIT_SAMPLES - 1) as f64;
            let v = sample_v(probe.along(d));
            if !v.is_finite() {
                continue;
            }
            let x = d / hi;
            rows.push((1..=nb).map(|k| x.powi(k as i32)).collect::<Vec<_>>());
            rhs.push(v);
        }
        if rows.len() < MIN_FIT_SAMPLES.max(nb + 1) {
            return Err(Error::InsufficientSamples(format!(
                "{} usable samples on the normal at s = {}",
                rows.len(),
                probe.s
            )));
        }
        let coef = least_squares(&rows, &rhs)?;
        let misfit = rows
            .iter()
            .zip(&rhs)
            .map(|(r, v)| {
                let p: f64 = r.iter().zip(&coef).map(|(a, c)| a * c).sum();
                (p - v).powi(2)
            })
            .sum::<f64>();
        fits.push(ProbeFit {
            probe: *probe,
            c1: coef[0] / hi,
            c2: coef[1] / (hi * hi),
            residual: (misfit / rows.len() as f64).sqrt(),
            samples: rows.len(),
        });
    }
    Ok(ExpansionFit { window, basis, fits })
}

/// [`fit_expansion_with`] on an interpolated hyperbolic-radius field.
pub fn fit_expansion(
    v: &GridField,
    domain: &Domain2D,
    probes: &[Probe],
    window: (f64, f64),
    basis: FitBasis,
) -> Result<ExpansionFit> {
    let s = RadiusSampler::from_v(v, domain);
    fit_expansion_with(|p| s.v(p), probes, window, basis)
}

/// Default window (2h, min(0.1, reach/4)) shifted by the trim level.
pub fn default_window(domain: &Domain2D, h_grid: f64, trim: f64) -> (f64, f64) {
    (trim + 2.0 * h_grid, trim + (0.1f64).min(domain.reach() / 4.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientLimit {
    pub probe: Probe,
    /// Richardson extrapolation of |∇v| to d = 0.
    pub limit: f64,
    /// |∇v| at base, 2·base and 4·base.
    pub samples: [f64; 3],
}

/// Extrapolates |∇v| along each normal from d₀, 2d₀, 4d₀ with the
/// quadratic Richardson rule (8g(d₀) − 6g(2d₀) + g(4d₀))/3.
pub fn gradient_limit_with(grad_v: impl Fn(Point) -> Option<Point>, probes: &[Probe], base: f64) -> Result<Vec<GradientLimit>> {
    probes
        .iter()
        .map(|probe| {
            let mut g = [0.0; 3];
            for (k, m) in [1.0, 2.0, 4.0].iter().enumerate() {
                g[k] = grad_v(probe.along(m * base))
                    .ok_or_else(|| Error::InsufficientSamples(format!("no gradient stencil at s = {}", probe.s)))?
                    .norm();
            }
            Ok(GradientLimit {
                probe: *probe,
                limit: (8.0 * g[0] - 6.0 * g[1] + g[2]) / 3.0,
                samples: g,
            })
        })
        .collect()
}

/// [`gradient_limit_with`] on an interpolated field, based at d₀ = trim + 4h.
pub fn gradient_limit(v: &GridField, domain: &Domain2D, probes: &[Probe]) -> Result<Vec<GradientLimit>> {
    let s = RadiusSampler::from_v(v, domain);
    gradient_limit_with(|p| s.gradient_v(p), probes, v.trim + 4.0 * v.spacing)
}

#[derive(Debug, Clone, Serialize)]
pub struct LogRatio {
    pub probe: Probe,
    /// sup over the window of |u/ln(2d) + 1| / d.
    pub sup: f64,
    pub at_d: f64,
}

pub fn log_ratio_check_with(sample_u: impl Fn(Point) -> f64, probes: &[Probe], window: (f64, f64)) -> Result<Vec<LogRatio>> {
    let (lo, hi) = window;
    if hi > LOG_RATIO_MAX_D {
        return invalid(format!("log-ratio window reaches d = {hi} > {LOG_RATIO_MAX_D}"));
    }
    if !(lo > 0.0 && hi > lo) {
        return invalid(format!("log-ratio window ({lo}, {hi}) is empty"));
    }
    probes
        .iter()
        .map(|probe| {
            let mut best = (0.0f64, lo);
            let mut used = 0;
            for q in 0..FIT_SAMPLES {
                let d = lo + (hi - lo) * q as f64 / (FIT_SAMPLES - 1) as f64;
                let u = sample_u(probe.along(d));
                if !u.is_finite() {
                    continue;
                }
                used += 1;
                let r = (u / (2.0 * d).ln() + 1.0).abs() / d;
                if r > best.0 {
                    best = (r, d);
                }
            }
            if used < MIN_FIT_SAMPLES {
                return Err(Error::InsufficientSamples(format!("log ratio at s = {}", probe.s)));
            }
            Ok(LogRatio {
                probe: *probe,
                sup: best.0,
                at_d: best.1,
            })
        })
        .collect()
}

pub fn log_ratio_check(u: &GridField, domain: &Domain2D, probes: &[Probe], window: (f64, f64)) -> Result<Vec<LogRatio>> {
    let s = RadiusSampler::from_u(u, domain);
    log_ratio_check_with(|p| s.u(p), probes, window)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    /// log₂ of the error ratio to the previous (coarser) row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn from_errors(hs: &[f64], errors: &[f64]) -> Result<Self> {
        if hs.len() < 3 || hs.len() != errors.len() {
            return invalid("a convergence study needs at least 3 grids");
        }
        let rows = hs
            .iter()
            .zip(errors)
            .enumerate()
            .map(|(k, (&h, &error))| ConvergenceRow {
                h,
                error,
                order: (k > 0).then(|| (errors[k - 1] / error).ln() / (hs[k - 1] / h).ln()),
            })
            .collect();
        Ok(ConvergenceTable { rows })
    }

    /// Order observed between the two finest grids.
    pub fn final_order(&self) -> f64 {
        self.rows.last().and_then(|r| r.order).unwrap_or(f64::NAN)
    }

    pub fn min_order(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.order).fold(f64::INFINITY, f64::min)
    }

    /// True when some refinement grows the error by more than a factor 2.
    pub fn has_regression(&self) -> bool {
        self.rows.windows(2).any(|w| w[1].error > 2.0 * w[0].error)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,error,order\n");
        for r in &self.rows {
            let o = r.order.map_or(String::new(), |o| format!("{o:.6}"));
            s.push_str(&format!("{:e},{:e},{}\n", r.h, r.error, o));
        }
        s
    }
}

/// Runs `error_at(h)` on each spacing (coarse to fine) and tabulates the
/// observed orders.
pub fn convergence_study(hs: &[f64], mut error_at: impl FnMut(f64) -> Result<f64>) -> Result<ConvergenceTable> {
    if hs.len() < 3 {
        return invalid("a convergence study needs at least 3 grids");
    }
    let errors = hs.iter().map(|&h| error_at(h)).collect::<Result<Vec<_>>>()?;
    ConvergenceTable::from_errors(hs, &errors)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResidual {
    pub nodes: usize,
    /// sup |vΔv − |∇v|² + 4|.
    pub max_abs: f64,
    /// sup d·|vΔv − |∇v|² + 4|.
    pub max_weighted: f64,
}

/// Discrete residual of vΔv = |∇v|² − 4 at nodes with d > 10h.
pub fn identity_residual(v: &GridField, grid: &Grid) -> IdentityResidual {
    let mut out = IdentityResidual {
        nodes: 0,
        max_abs: 0.0,
        max_weighted: 0.0,
    };
    for &k in grid.unknown_nodes() {
        let d = grid.distance(k);
        if d <= 10.0 * grid.spacing {
            continue;
        }
        if let Some((c, g, lap)) = local_derivatives(v, k) {
            let r = (c * lap - g.dot(g) + 4.0).abs();
            out.nodes += 1;
            out.max_abs = out.max_abs.max(r);
            out.max_weighted = out.max_weighted.max(d * r);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderFit {
    pub probe: Probe,
    /// Fitted exponent α in |v − 2d + κd²| ≈ C d^{2+α}.
    pub alpha: f64,
    pub constant: f64,
}

/// Log-log fit of the expansion remainder along each normal; probes whose
/// remainder vanishes to rounding are skipped.
pub fn remainder_exponent(
    sample_v: impl Fn(Point) -> f64,
    probes: &[Probe],
    window: (f64, f64),
) -> Result<Vec<RemainderFit>> {
    let (lo, hi) = window;
    let mut out = Vec::new();
    for probe in probes {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for q in 0..FIT_SAMPLES {
            let d = lo * (hi / lo).powf(q as f64 / (FIT_SAMPLES - 1) as f64);
            let r = (sample_v(probe.along(d)) - 2.0 * d + probe.curvature * d * d).abs();
            if r.is_finite() && r > 1e-14 {
                xs.push(d.ln());
                ys.push(r.ln());
            }
        }
        if xs.len() < MIN_FIT_SAMPLES {
            continue;
        }
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let c = least_squares(&rows, &ys)?;
        out.push(RemainderFit {
            probe: *probe,
            alpha: c[1] - 2.0,
            constant: c[0].exp(),
        });
    }
    Ok(out)
}

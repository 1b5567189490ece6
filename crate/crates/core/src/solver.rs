//! Newton solver for the Dirichlet problem of −Δu + 4e^{2u} = 0 with the
//! Shortley–Weller Laplacian, and the maximal-solution strategies built on
//! it.

use crate::cutoff;
use crate::error::{invalid, Error, Result};
use crate::field::GridField;
use crate::geometry::{Cut, Domain2D, Grid, Leg};
use crate::linalg::{bicgstab, sup_norm, CsrMatrix, DirectLu};
use serde::Serialize;

/// Exponent guard for e^{2u}.
const MAX_EXPONENT: f64 = 700.0;

/// Largest admissible constant boundary value in the maximal sequence.
pub const MAX_SEQUENCE_DATA: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LinearMethod {
    /// Sparse LU, symbolic factorization reused across Newton steps.
    Direct,
    /// Jacobi-preconditioned BiCGSTAB, relative tolerance 1e−12.
    BiCgStab,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveOptions {
    /// Sup-norm residual tolerance.
    pub tol: f64,
    /// Newton stops once the update sup-norm falls below this value.
    pub step_tol: f64,
    pub max_iters: usize,
    pub linear: LinearMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            step_tol: 1e-10,
            max_iters: 50,
            linear: LinearMethod::Direct,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveReport {
    pub unknowns: usize,
    pub iterations: usize,
    pub residual_norms: Vec<f64>,
    pub step_norms: Vec<f64>,
    pub linear_iters: Vec<usize>,
    pub damping_used: Vec<f64>,
    pub converged: bool,
    pub stop_reason: String,
}

/// Blend of the shifted distance to a positive constant away from the
/// boundary: `D = χ(d)·(d + δ) + (1 − χ(d))·c`, with χ = 1 for d ≤ r1 and
/// χ = 0 for d ≥ r2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regularizer {
    pub r1: f64,
    pub r2: f64,
    /// δ; zero for the maximal solution.
    pub offset: f64,
}

impl Regularizer {
    /// Blend radii 0.45 and 0.9 times min(reach, largest interior distance).
    pub fn for_grid(domain: &Domain2D, grid: &Grid) -> Self {
        let dmax = grid
            .unknown_nodes()
            .iter()
            .map(|&k| grid.distance(k))
            .fold(0.0, f64::max);
        let r = domain.reach().min(dmax);
        Regularizer {
            r1: 0.45 * r,
            r2: 0.9 * r,
            offset: 0.0,
        }
    }

    /// The same blend with D = d + δ near the boundary.  With δ = e^{−n}/2
    /// the data u = n becomes z = 0.
    pub fn with_offset(self, offset: f64) -> Self {
        Regularizer { offset, ..self }
    }

    fn c(&self) -> f64 {
        0.5 * (self.r1 + self.r2)
    }

    /// (D, |∇D|, ΔD) at a point with distance `d` and Laplacian Δd.
    pub fn eval(&self, d: f64, lap_d: f64) -> (f64, f64, f64) {
        let w = self.r2 - self.r1;
        let s = (d - self.r1) / w;
        let chi = 1.0 - cutoff::step(s);
        let chi1 = -cutoff::step_d1(s) / w;
        let chi2 = -cutoff::step_d2(s) / (w * w);
        let c = self.c();
        let e = d + self.offset - c;
        let big_d = c + chi * e;
        let g = chi + e * chi1;
        let lap = if d >= self.r2 {
            0.0
        } else {
            g * lap_d + 2.0 * chi1 + e * chi2
        };
        (big_d, g, lap)
    }

    /// ln(2D) at a point.
    pub fn log_two_d(&self, d: f64) -> f64 {
        (2.0 * self.eval(d, 0.0).0).ln()
    }
}

/// Which unknown is solved for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formulation {
    /// u itself: −Δu + 4e^{2u} = 0.
    Direct,
    /// z = u + ln(2D): −Δz + (e^{2z} − |∇D|²)/D² + ΔD/D = 0.
    Regularized(Regularizer),
}

/// Discrete Dirichlet problem on the interior unknowns of a grid.
pub struct DirichletProblem<'a> {
    pub grid: &'a Grid,
    pub formulation: Formulation,
    /// Boundary value (of the solved unknown) at each cut point.
    pub data: Vec<f64>,
    laplacian: CsrMatrix,
    boundary_term: Vec<f64>,
    diag_pos: Vec<usize>,
    /// Per unknown (1/D², 1 − |∇D|², ΔD/D) for the regularized form.
    coeffs: Vec<(f64, f64, f64)>,
}

impl<'a> DirichletProblem<'a> {
    pub fn new(grid: &'a Grid, formulation: Formulation, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.cuts().len() {
            return invalid("one boundary value per cut point is required");
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return invalid(format!("boundary data not finite at cut point {i}"));
        }
        let h2 = grid.spacing * grid.spacing;
        let n = grid.num_unknowns();
        let mut boundary_term = vec![0.0; n];
        let mut rows = Vec::with_capacity(n);
        for u in 0..n {
            let legs = grid.legs(u);
            let f = grid.leg_fractions(u);
            let mut row = Vec::with_capacity(5);
            let mut diag = 0.0;
            for axis in 0..2 {
                let (a, b) = (f[2 * axis], f[2 * axis + 1]);
                let ca = 2.0 / (a * (a + b) * h2);
                let cb = 2.0 / (b * (a + b) * h2);
                diag -= ca + cb;
                for (leg, c) in [(legs[2 * axis], ca), (legs[2 * axis + 1], cb)] {
                    match leg {
                        Leg::Node(v) => row.push((v, c)),
                        Leg::Cut(ci) => boundary_term[u] += c * data[ci],
                    }
                }
            }
            row.push((u, diag));
            rows.push(row);
        }
        let laplacian = CsrMatrix::from_rows(n, rows);
        let diag_pos = (0..n)
            .map(|i| {
                (laplacian.row_ptr[i]..laplacian.row_ptr[i + 1])
                    .find(|&p| laplacian.cols[p] == i)
                    .expect("diagonal entry")
            })
            .collect();
        let coeffs = match formulation {
            Formulation::Direct => Vec::new(),
            Formulation::Regularized(reg) => grid
                .unknown_nodes()
                .iter()
                .map(|&k| {
                    let (dd, g, lap) = reg.eval(grid.distance(k), grid.laplacian_d(k));
                    (1.0 / (dd * dd), 1.0 - g * g, lap / dd)
                })
                .collect(),
        };
        Ok(DirichletProblem {
            grid,
            formulation,
            data,
            laplacian,
            boundary_term,
            diag_pos,
            coeffs,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.laplacian.n
    }

    /// Δ_h x including the boundary contributions.
    pub fn laplacian(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.laplacian.matvec(x, &mut y);
        for (yi, b) in y.iter_mut().zip(&self.boundary_term) {
            *yi += b;
        }
        y
    }

    /// Nodal residual −Δ_h x + N(x).
    pub fn residual_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.laplacian(x);
        for (i, ri) in r.iter_mut().enumerate() {
            let e = 2.0 * x[i];
            if !(e <= MAX_EXPONENT) {
                return Err(Error::Overflow { node: i, value: e });
            }
            let nl = match self.formulation {
                Formulation::Direct => 4.0 * e.exp(),
                Formulation::Regularized(_) => {
                    let (inv_d2, one_minus_g2, lap_over_d) = self.coeffs[i];
                    (e.exp_m1() + one_minus_g2) * inv_d2 + lap_over_d
                }
            };
            *ri = nl - *ri;
        }
        Ok(r)
    }

    fn jacobian(&self, x: &[f64]) -> CsrMatrix {
        let mut j = self.laplacian.clone();
        for v in j.vals.iter_mut() {
            *v = -*v;
        }
        for (i, &p) in self.diag_pos.iter().enumerate() {
            j.vals[p] += match self.formulation {
                Formulation::Direct => 8.0 * (2.0 * x[i]).exp(),
                Formulation::Regularized(_) => 2.0 * (2.0 * x[i]).exp() * self.coeffs[i].0,
            };
        }
        j
    }

    /// Converts solved unknowns into u values.
    pub fn to_u(&self, x: &[f64]) -> Vec<f64> {
        match self.formulation {
            Formulation::Direct => x.to_vec(),
            Formulation::Regularized(reg) => self
                .grid
                .unknown_nodes()
                .iter()
                .zip(x)
                .map(|(&k, z)| z - reg.log_two_d(self.grid.distance(k)))
                .collect(),
        }
    }

    /// Converts u values into solved unknowns.
    pub fn from_u(&self, u: &[f64]) -> Vec<f64> {
        match self.formulation {
            Formulation::Direct => u.to_vec(),
            Formulation::Regularized(reg) => self
                .grid
                .unknown_nodes()
                .iter()
                .zip(u)
                .map(|(&k, v)| v + reg.log_two_d(self.grid.distance(k)))
                .collect(),
        }
    }
}

/// Nodewise residual of a u field.
pub fn residual(problem: &DirichletProblem, u: &GridField) -> Result<GridField> {
    let x = problem.from_u(&u.unknowns(problem.grid));
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("field is not defined on every interior node");
    }
    Ok(GridField::from_unknowns(problem.grid, &problem.residual_vec(&x)?))
}

/// Damped Newton iteration from `u0`; returns the u field and the trace.
pub fn newton_solve(problem: &DirichletProblem, u0: &GridField, opts: &SolveOptions) -> Result<(GridField, SolveReport)> {
    let x0 = problem.from_u(&u0.unknowns(problem.grid));
    let (x, report) = newton_unknowns(problem, x0, opts)?;
    Ok((GridField::from_unknowns(problem.grid, &problem.to_u(&x)), report))
}

fn newton_unknowns(problem: &DirichletProblem, mut x: Vec<f64>, opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("initial guess is not finite");
    }
    let mut report = SolveReport {
        unknowns: x.len(),
        ..Default::default()
    };
    let mut lu = DirectLu::new();
    let mut f = problem.residual_vec(&x)?;
    let mut r = sup_norm(&f);
    report.residual_norms.push(r);
    for _ in 0..opts.max_iters {
        if r <= opts.tol {
            report.converged = true;
            report.stop_reason = "residual".into();
            break;
        }
        let jac = problem.jacobian(&x);
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (dx, lin_its) = match opts.linear {
            LinearMethod::Direct => (lu.solve(&jac, &rhs)?, 1),
            LinearMethod::BiCgStab => {
                let (dx, stats) = bicgstab(&jac, &rhs, &vec![0.0; x.len()], 1e-12, 20 * x.len() + 100)?;
                (dx, stats.iterations)
            }
        };
        let step = sup_norm(&dx);
        let scale = 1.0f64.max(sup_norm(&x));
        report.iterations += 1;
        report.linear_iters.push(lin_its);
        report.step_norms.push(step);

        if step <= opts.step_tol * scale {
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            f = problem.residual_vec(&x)?;
            r = sup_norm(&f);
            report.residual_norms.push(r);
            report.damping_used.push(1.0);
            report.converged = true;
            report.stop_reason = "step".into();
            break;
        }

        let mut accepted = None;
        let mut lambda = 1.0;
        while lambda >= 1.0 / 64.0 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            match problem.residual_vec(&trial) {
                Ok(ft) => {
                    let rt = sup_norm(&ft);
                    if rt < r || lambda == 1.0 / 64.0 {
                        accepted = Some((trial, ft, rt));
                        break;
                    }
                }
                Err(Error::Overflow { .. }) if lambda > 1.0 / 64.0 => {}
                Err(e) => return Err(e),
            }
            lambda *= 0.5;
        }
        let (xt, ft, rt) = accepted.expect("line search always accepts its last factor");
        x = xt;
        f = ft;
        r = rt;
        report.residual_norms.push(r);
        report.damping_used.push(lambda);
    }
    if !report.converged && r <= opts.tol {
        report.converged = true;
        report.stop_reason = "residual".into();
    }
    if !report.converged {
        report.stop_reason = "max_iters".into();
    }
    Ok((x, report))
}

fn initial_u(grid: &Grid, cap: f64) -> Vec<f64> {
    grid.unknown_nodes()
        .iter()
        .map(|&k| (-(2.0 * grid.distance(k).max(grid.spacing)).ln()).min(cap))
        .collect()
}

/// Solutions with constant boundary data n, solved for z = u + ln 2D with
/// D = d + e^{−n}/2 near the boundary so the thin layer next to ∂Ω is
/// carried by the logarithm rather than the grid.
#[derive(Debug, Clone)]
pub struct MaximalSequence {
    pub n_values: Vec<f64>,
    pub fields: Vec<GridField>,
    pub reports: Vec<SolveReport>,
    /// Largest nodewise decrease u_n − u_{n+1} over consecutive members.
    pub max_violation: f64,
    /// Violations stayed below 1e−8.
    pub monotone: bool,
}

pub fn maximal_sequence(domain: &Domain2D, n_values: &[f64], h_grid: f64, opts: &SolveOptions) -> Result<MaximalSequence> {
    if n_values.is_empty() {
        return invalid("at least one boundary value is required");
    }
    if n_values.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("boundary values must be increasing");
    }
    if let Some(n) = n_values.iter().find(|&&n| n > MAX_SEQUENCE_DATA) {
        return invalid(format!("boundary value {n} exceeds the overflow cap {MAX_SEQUENCE_DATA}"));
    }
    let grid = Grid::build(domain, h_grid, 0.0)?;
    let mut fields = Vec::new();
    let mut reports = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut max_violation = 0.0f64;
    let base = Regularizer::for_grid(domain, &grid);
    for &n in n_values {
        let reg = base.with_offset(0.5 * (-n).exp());
        let problem = DirichletProblem::new(&grid, Formulation::Regularized(reg), vec![0.0; grid.cuts().len()])?;
        let (z, report) = newton_unknowns(&problem, vec![0.0; grid.num_unknowns()], opts)?;
        let x = problem.to_u(&z);
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&x) {
                max_violation = max_violation.max(a - b);
            }
        }
        fields.push(GridField::from_unknowns(&grid, &x));
        reports.push(report);
        prev = Some(x);
    }
    Ok(MaximalSequence {
        n_values: n_values.to_vec(),
        fields,
        reports,
        max_violation,
        monotone: max_violation < 1e-8,
    })
}

/// Expansion data at a cut point: −ln(2d) for order 1, −ln(2d − κd²) for
/// order 2, with κ taken at the nearest boundary point.
pub fn expansion_data(cut: &Cut, order: u8) -> Result<f64> {
    let d = cut.projection.distance;
    let k = cut.projection.curvature;
    let arg = match order {
        1 => 2.0 * d,
        2 => 2.0 * d - k * d * d,
        _ => return invalid(format!("expansion order must be 1 or 2, got {order}")),
    };
    if !(arg > 0.0) {
        return invalid(format!(
            "expansion data 2d − κd² = {arg:e} is not positive at d = {d}; reduce the trim"
        ));
    }
    Ok(-arg.ln())
}

/// Solve on {d > h_trim} with the beginning of the boundary expansion as
/// Dirichlet data.
pub fn trimmed_solve(domain: &Domain2D, h_trim: f64, order: u8, h_grid: f64, opts: &SolveOptions) -> Result<(GridField, SolveReport)> {
    if !(h_trim > 0.0 && h_trim < 0.5 * domain.reach()) {
        return invalid(format!(
            "trim {h_trim} must lie in (0, reach/2) = (0, {})",
            0.5 * domain.reach()
        ));
    }
    let grid = Grid::build(domain, h_grid, h_trim)?;
    let data = grid
        .cuts()
        .iter()
        .map(|c| expansion_data(c, order))
        .collect::<Result<Vec<_>>>()?;
    let problem = DirichletProblem::new(&grid, Formulation::Direct, data)?;
    let cap = problem.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (x, report) = newton_unknowns(&problem, initial_u(&grid, cap), opts)?;
    Ok((GridField::from_unknowns(&grid, &x), report))
}

/// Maximal solution through the regularized unknown z = u + ln(2D).  Cuts
/// on ∂Ω carry z = 0 (v vanishes there).  Cuts off the boundary, on
/// {d = trim} or on the artificial edges of a strip, take the order-2
/// expansion.
pub fn regularized_solve(domain: &Domain2D, h_grid: f64, trim: f64, opts: &SolveOptions) -> Result<(GridField, SolveReport)> {
    let grid = Grid::build(domain, h_grid, trim)?;
    regularized_solve_on(domain, &grid, opts)
}

pub fn regularized_solve_on(domain: &Domain2D, grid: &Grid, opts: &SolveOptions) -> Result<(GridField, SolveReport)> {
    let reg = Regularizer::for_grid(domain, grid);
    let data = grid
        .cuts()
        .iter()
        .map(|c| {
            let d = c.projection.distance;
            if d <= 1e-12 {
                Ok(0.0)
            } else {
                Ok(expansion_data(c, 2)? + reg.log_two_d(d))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = DirichletProblem::new(grid, Formulation::Regularized(reg), data)?;
    let (x, report) = newton_unknowns(&problem, vec![0.0; grid.num_unknowns()], opts)?;
    Ok((GridField::from_unknowns(grid, &problem.to_u(&x)), report))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonotonicityReport {
    pub compared_nodes: usize,
    /// max(u_outer − u_inner, 0) over compared nodes.
    pub max_violation: f64,
}

/// Checks u_Ω ≤ u_Ω′ for Ω′ ⊂ Ω on the nodes of the inner field, reading
/// the outer field at shared nodes or by bicubic interpolation.
pub fn domain_monotonicity(u_outer: &GridField, u_inner: &GridField) -> MonotonicityReport {
    let aligned = (u_outer.spacing - u_inner.spacing).abs() <= 1e-15 * u_inner.spacing;
    let mut compared = 0;
    let mut worst = 0.0f64;
    for (k, &ui) in u_inner.values.iter().enumerate() {
        if !ui.is_finite() {
            continue;
        }
        let p = u_inner.node_point(k);
        let uo = if aligned {
            let fi = ((p.x - u_outer.origin.x) / u_outer.spacing).round();
            let fj = ((p.y - u_outer.origin.y) / u_outer.spacing).round();
            if fi < 0.0 || fj < 0.0 || fi as usize >= u_outer.nx || fj as usize >= u_outer.ny {
                f64::NAN
            } else {
                u_outer.get(fi as usize, fj as usize)
            }
        } else {
            u_outer.sample(p)
        };
        if uo.is_finite() {
            compared += 1;
            worst = worst.max(uo - ui);
        }
    }
    MonotonicityReport {
        compared_nodes: compared,
        max_violation: worst,
    }
}

use serde::Serialize;

use liouville::analysis::ConvergenceTable;
use liouville::field::GridField;
use liouville::fuchsian::{hyperbolic_radius, renormalize, w0_fixed_point, W0Options};
use liouville::geometry::{CollarChart, Domain2D, Grid, Shape};
use liouville::oracles::RadialOracle;
use liouville::solver::{
    maximal_sequence, regularized_solve_on, trimmed_solve, SolveOptions, SolveReport,
};

use crate::{load, write_json, Common, Mode, Outcome, SolveArgs};

pub fn solve_field(
    domain: &Domain2D,
    mode: Mode,
    h_grid: f64,
    h_trim: f64,
    order: u8,
    n: f64,
    opts: &SolveOptions,
) -> Result<(Grid, GridField, SolveReport), Outcome> {
    Ok(match mode {
        Mode::Trimmed => {
            let (u, rep) = trimmed_solve(domain, h_trim, order, h_grid, opts)?;
            (Grid::build(domain, h_grid, h_trim)?, u, rep)
        }
        Mode::Regularized => {
            let grid = Grid::build(domain, h_grid, 0.0)?;
            let (u, rep) = regularized_solve_on(domain, &grid, opts)?;
            (grid, u, rep)
        }
        Mode::Data => {
            let seq = maximal_sequence(domain, &[n], h_grid, opts)?;
            let grid = Grid::build(domain, h_grid, 0.0)?;
            let rep = seq.reports.into_iter().next().unwrap_or_default();
            (grid, seq.fields.into_iter().next().expect("one member"), rep)
        }
    })
}

fn write_fields(dir: &std::path::Path, grid: &Grid, u: &GridField) -> Result<(), Outcome> {
    let v = hyperbolic_radius(u);
    u.write(dir.join("u.field"))?;
    v.write(dir.join("v.field"))?;
    renormalize(&v, grid).write(dir.join("w.field"))?;
    Ok(())
}

pub fn solve(a: &SolveArgs) -> Result<Outcome, Outcome> {
    let domain = load(&a.common)?;
    if !matches!(a.order, 1 | 2) {
        return Err(Outcome::Config(format!("order must be 1 or 2, got {}", a.order)));
    }
    let opts = SolveOptions {
        tol: a.tol,
        max_iters: a.max_iters,
        ..SolveOptions::default()
    };
    let (grid, u, rep) = solve_field(&domain, a.mode, a.h_grid, a.h_trim, a.order, a.n, &opts)?;
    write_fields(&a.common.out, &grid, &u)?;
    write_json(&a.common.out, "solve_report.json", &rep)?;
    if rep.converged {
        Ok(Outcome::Pass)
    } else {
        Err(Outcome::NotConverged(format!(
            "Newton stopped ({}) at residual {:e}; fields written as partial output",
            rep.stop_reason,
            rep.residual_norms.last().copied().unwrap_or(f64::NAN)
        )))
    }
}

pub fn exact(common: &Common, h_grid: f64) -> Result<Outcome, Outcome> {
    let domain = load(common)?;
    let oracle = RadialOracle::for_domain(&domain)?;
    let grid = Grid::build(&domain, h_grid, 0.0)?;
    let u = GridField::from_fn(&grid, |k, p| {
        if grid.is_interior(k) {
            oracle.u(p).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        }
    });
    write_fields(&common.out, &grid, &u)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct W0Summary {
    theta: f64,
    nt: usize,
    base: (f64, f64),
    curvature: f64,
    trace_at_base: f64,
    iterations: usize,
    contraction: f64,
    steps: Vec<f64>,
    residual: f64,
}

pub fn w0(common: &Common, theta: f64, nt: usize, s0: f64, component: usize, tol: f64) -> Result<Outcome, Outcome> {
    let domain = load(common)?;
    let chart = CollarChart::new(&domain, component, s0, theta, nt)?;
    let opts = W0Options {
        tol,
        ..W0Options::default()
    };
    let r = w0_fixed_point(&chart, opts)?;
    r.w0.write(common.out.join("w0.collar"))?;
    let mut steps = String::from("iteration,step\n");
    for (k, s) in r.steps.iter().enumerate() {
        steps.push_str(&format!("{},{:e}\n", k + 1, s));
    }
    std::fs::write(common.out.join("contraction.csv"), steps)?;
    write_json(
        &common.out,
        "w0_report.json",
        &W0Summary {
            theta,
            nt,
            base: (chart.base.x, chart.base.y),
            curvature: domain.curvature_on(component, s0)?,
            trace_at_base: r.w0.at(0, nt),
            iterations: r.iterations,
            contraction: r.contraction,
            steps: r.steps.clone(),
            residual: r.residual,
        },
    )?;
    Ok(Outcome::Pass)
}

/// Sup-norm error of v against the closed form on nodes with d ≥ trim.
fn oracle_v_error(domain: &Domain2D, grid: &Grid, u: &GridField) -> Result<f64, Outcome> {
    let exact = exact_u(domain)?;
    let mut e = 0.0f64;
    for &k in grid.unknown_nodes() {
        let p = grid.node_point(k);
        e = e.max(((-u.values[k]).exp() - (-exact(p)).exp()).abs());
    }
    Ok(e)
}

pub fn exact_u(domain: &Domain2D) -> Result<Box<dyn Fn(liouville::geometry::Point) -> f64>, Outcome> {
    if let Shape::Strip { .. } = domain.shape() {
        return Ok(Box::new(|p| -(2.0 * p.x).ln()));
    }
    let o = RadialOracle::for_domain(domain)?;
    Ok(Box::new(move |p| o.u(p).unwrap_or(f64::NAN)))
}

pub fn convergence(common: &Common, hs: &[f64], mode: Mode, h_trim: f64, order: u8) -> Result<Outcome, Outcome> {
    let domain = load(common)?;
    if hs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Outcome::Config("grid spacings must decrease".into()));
    }
    let opts = SolveOptions::default();
    let mut errors = Vec::new();
    for &h in hs {
        let (grid, u, rep) = solve_field(&domain, mode, h, h_trim, order, 0.0, &opts)?;
        if !rep.converged {
            return Err(Outcome::NotConverged(format!("solve at h = {h} did not converge")));
        }
        errors.push(oracle_v_error(&domain, &grid, &u)?);
    }
    let table = ConvergenceTable::from_errors(hs, &errors)?;
    std::fs::write(common.out.join("convergence.csv"), table.to_csv())?;
    write_json(&common.out, "convergence.json", &table)?;
    Ok(if table.has_regression() {
        Outcome::CheckFailed
    } else {
        Outcome::Pass
    })
}

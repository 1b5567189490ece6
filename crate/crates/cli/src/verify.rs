use liouville::analysis::{
    default_window, fit_expansion, gradient_limit, identity_residual, log_ratio_check, probes, FitBasis,
};
use liouville::fuchsian::{
    holder_seminorm, hyperbolic_radius, renormalize, renormalized_on_chart, search_envelope, w0_fixed_point,
    W0Options,
};
use liouville::geometry::{CollarChart, Domain2D, Grid, Shape};
use liouville::oracles::RadialOracle;
use liouville::report::{Check, Report};
use liouville::solver::SolveOptions;
use liouville::Error;

use crate::commands::{exact_u, solve_field};
use crate::{load, write_json, Common, Mode, Outcome};

/// Coarsest spacing at which refinement checks are meaningful.
pub const MAX_REFINEMENT_SPACING: f64 = 1.0 / 32.0;
const PROBES: usize = 8;
const LOG_RATIO_WINDOW: (f64, f64) = (0.04, 0.2);

fn oracle_checks(domain: &Domain2D, report: &mut Report) {
    let Ok(o) = RadialOracle::for_domain(domain) else {
        return;
    };
    let (lo, hi) = match domain.shape() {
        Shape::Annulus { r0, .. } => (*r0, 1.0 / r0),
        Shape::Circle { radius, .. } => (0.0, *radius),
        _ => return,
    };
    // the difference quotient loses accuracy next to the boundary
    let (lo, hi) = (if lo > 0.0 { lo + 0.05 } else { 0.0 }, hi - 0.05);
    let mut res = 0.0f64;
    for k in 1..50 {
        let r = lo + (hi - lo) * k as f64 / 50.0;
        res = res.max(o.radial_residual(r, 1e-4).unwrap_or(f64::INFINITY).abs());
    }
    report.push(Check::at_most("oracle", "radial_residual", res, 1e-6));
    let edge = match domain.shape() {
        Shape::Annulus { r0, .. } => o.v_radial_unchecked(*r0).abs().max(o.v_radial_unchecked(1.0 / r0).abs()),
        Shape::Circle { radius, .. } => o.v_radial_unchecked(*radius).abs(),
        _ => return,
    };
    report.push(Check::at_most("oracle", "boundary_value", edge, 1e-12));
    if let Shape::Circle { radius, .. } = domain.shape() {
        if let Ok(grid) = Grid::build(domain, 1.0 / 32.0, 0.0) {
            let v = liouville::field::GridField::from_fn(&grid, |k, p| {
                if grid.is_interior(k) {
                    o.v(p).unwrap_or(f64::NAN)
                } else {
                    f64::NAN
                }
            });
            let w = renormalize(&v, &grid);
            let dev = w.sup_norm_where(|_| true).max(0.0);
            let err = w
                .values
                .iter()
                .filter(|x| x.is_finite())
                .map(|x| (x + 1.0 / radius).abs())
                .fold(0.0, f64::max);
            report.push(Check::at_most("oracle", "disk_w_constant", err, 1e-10).detail(format!("sup|w| = {dev}")));
        }
    }
}

fn solver_and_analysis(domain: &Domain2D, h: f64, theta: f64, alpha: f64, seed: u64, report: &mut Report) -> Result<(), Outcome> {
    let opts = SolveOptions::default();
    let (grid, u, rep) = solve_field(domain, Mode::Regularized, h, 0.0, 2, 0.0, &opts)?;
    report.push(Check::with_status("solver", "converged", rep.iterations as f64, opts.max_iters as f64, rep.converged));
    if !rep.converged {
        return Err(Outcome::NotConverged(rep.stop_reason));
    }
    if let Ok(exact) = exact_u(domain) {
        let mut e = 0.0f64;
        for &k in grid.unknown_nodes() {
            let p = grid.node_point(k);
            e = e.max(((-u.values[k]).exp() - (-exact(p)).exp()).abs());
        }
        report.push(Check::at_most("solver", "oracle_v_error", e, 50.0 * h * h));
    }
    let v = hyperbolic_radius(&u);
    // the gradient samples reach out to 16h and must stay inside half the reach
    if h > MAX_REFINEMENT_SPACING || 32.0 * h > domain.reach() * (1.0 + 1e-9) {
        let msg = format!("h = {h} is too coarse for reach {}", domain.reach());
        for name in ["fit_c1", "fit_c2_relative", "gradient_limit", "log_ratio_bound"] {
            report.push(Check::insufficient("analysis", name, msg.clone()));
        }
    } else {
        let pr = probes(domain, PROBES)?;
        let fit = fit_expansion(&v, domain, &pr, default_window(domain, h, 0.0), FitBasis::Cubic)?;
        let c1 = fit.fits.iter().map(|f| (f.c1 - 2.0).abs()).fold(0.0, f64::max);
        report.push(Check::at_most("analysis", "fit_c1", c1, 2e-2));
        let c2 = fit
            .fits
            .iter()
            .map(|f| {
                let k = f.probe.curvature;
                if k.abs() > 1e-12 {
                    ((f.c2 + k) / k).abs()
                } else {
                    f.c2.abs()
                }
            })
            .fold(0.0, f64::max);
        report.push(Check::at_most("analysis", "fit_c2_relative", c2, 5e-2));
        let g = gradient_limit(&v, domain, &pr)?;
        let gerr = g.iter().map(|x| (x.limit - 2.0).abs()).fold(0.0, f64::max);
        report.push(Check::at_most("analysis", "gradient_limit", gerr, 2e-2));
        let lr = log_ratio_check(&u, domain, &pr, LOG_RATIO_WINDOW)?;
        let lr_max = lr.iter().map(|x| x.sup).fold(0.0, f64::max);
        report.push(Check::with_status("analysis", "log_ratio_bound", lr_max, f64::INFINITY, lr_max.is_finite()));
    }
    let id = identity_residual(&v, &grid);
    report.push(Check::at_most("analysis", "identity_weighted_residual", id.max_weighted, 50.0 * h));

    if !domain.is_strip() && theta < domain.reach() {
        let chart = CollarChart::new(domain, 0, 0.0, theta, 40)?;
        let r = w0_fixed_point(&chart, W0Options::default())?;
        report.push(Check::at_most("fuchsian", "w0_contraction", r.contraction, 0.9));
        report.push(Check::at_most("fuchsian", "w0_residual", r.residual, 1e-2));
        let kappa = domain.curvature_on(0, 0.0)?;
        let trace = r.w0.at(0, chart.nt);
        let terr = if kappa.abs() > 1e-12 { ((trace + kappa) / kappa).abs() } else { trace.abs() };
        report.push(Check::at_most("fuchsian", "w0_trace", terr, 2e-2));
        let w = renormalized_on_chart(&u, domain, &chart);
        match search_envelope(&w, &r.w0, &chart, 0.25 * theta) {
            Ok(env) => report.push(Check::with_status("fuchsian", "envelope_a", env.a.unwrap_or(f64::NAN), 100.0, env.a.is_some())),
            Err(Error::InsufficientSamples(m)) => report.push(Check::insufficient("fuchsian", "envelope_a", m)),
            Err(e) => return Err(e.into()),
        }
        match holder_seminorm(&w, alpha, 0, 0.25 * theta, seed) {
            Ok(hr) => report.push(Check::with_status("fuchsian", "holder_w", hr.seminorm, f64::INFINITY, hr.seminorm.is_finite())),
            Err(Error::InsufficientSamples(m)) => report.push(Check::insufficient("fuchsian", "holder_w", m)),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// Refinement: the log ratio and the c₂ fit must not drift or regress
/// between h and h/2.
fn refinement_checks(domain: &Domain2D, h: f64, report: &mut Report) -> Result<(), Outcome> {
    if h > MAX_REFINEMENT_SPACING {
        let msg = format!("h = {h} is coarser than {MAX_REFINEMENT_SPACING}");
        report.push(Check::insufficient("refinement", "log_ratio_drift", msg.clone()));
        report.push(Check::insufficient("refinement", "c2_regression", msg));
        return Ok(());
    }
    let pr = probes(domain, PROBES)?;
    let mut ratios = Vec::new();
    let mut c2err = Vec::new();
    for hh in [h, 0.5 * h] {
        let (_, u, _) = solve_field(domain, Mode::Regularized, hh, 0.0, 2, 0.0, &SolveOptions::default())?;
        let lr = log_ratio_check(&u, domain, &pr, LOG_RATIO_WINDOW)?;
        ratios.push(lr.iter().map(|x| x.sup).fold(0.0, f64::max));
        let fit = fit_expansion(&hyperbolic_radius(&u), domain, &pr, default_window(domain, h, 0.0), FitBasis::Cubic)?;
        c2err.push(fit.fits.iter().map(|f| (f.c2 + f.probe.curvature).abs()).fold(0.0, f64::max));
    }
    // absolute floor: on a flat boundary the ratio is zero up to rounding
    let drift = (ratios[1] - ratios[0]).abs() / ratios[0].max(1e-3);
    report.push(Check::at_most("refinement", "log_ratio_drift", drift, 0.2));
    let growth = if c2err[0] < 1e-10 { 0.0 } else { c2err[1] / c2err[0] };
    report.push(Check::at_most("refinement", "c2_regression", growth, 2.0));
    Ok(())
}

pub fn run(common: &Common, h: f64, theta: f64, alpha: f64) -> Result<Outcome, Outcome> {
    let domain = load(common)?;
    let mut report = Report::default();
    // infinite for a flat boundary
    let inv_reach = 1.0 / domain.reach();
    report.push(Check::with_status("geometry", "inverse_reach", inv_reach, f64::INFINITY, inv_reach.is_finite()));
    oracle_checks(&domain, &mut report);
    solver_and_analysis(&domain, h, theta, alpha, common.seed, &mut report)?;
    refinement_checks(&domain, h, &mut report)?;
    let json = report.to_json().map_err(|e| Outcome::Config(e.to_string()))?;
    std::fs::write(common.out.join("report.json"), json + "\n")?;
    std::fs::write(common.out.join("report.csv"), report.to_csv())?;
    let meta = serde_json::json!({
        "unix_time": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "domain": common.domain.display().to_string(),
    });
    write_json(&common.out, "metadata.json", &meta)?;
    Ok(Outcome::from_status(report.overall()))
}

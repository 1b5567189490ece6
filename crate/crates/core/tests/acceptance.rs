//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use liouville::analysis::{default_window, fit_expansion_with, fit_expansion, gradient_limit, log_ratio_check, probes, FitBasis};
use liouville::field::{CollarField, GridField};
use liouville::fuchsian::{
    apply_d, apply_l0, apply_l1, c2_sharp_norm, derivatives, g_operator, holder_seminorm, hyperbolic_radius,
    minus_two_laplacian_d, periodize, renormalize, renormalized_on_chart, search_envelope, tilde_f2, w0_fixed_point,
    W0Options,
};
use liouville::geometry::{CollarChart, Domain2D, Grid, Point};
use liouville::oracles::RadialOracle;
use liouville::solver::{domain_monotonicity, maximal_sequence, regularized_solve, trimmed_solve, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HS: [f64; 3] = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
const TH: f64 = 0.1;

type Outcome = (bool, String);

fn ellipse() -> Domain2D {
    Domain2D::ellipse(Point::ORIGIN, 2.0, 1.0).unwrap()
}

/// Regularized solves shared by several criteria.
struct Solutions {
    ellipse: Vec<GridField>,
    disk: GridField,
}

impl Solutions {
    fn compute() -> Self {
        let opts = SolveOptions::default();
        let dom = ellipse();
        let ellipse = HS
            .iter()
            .map(|&h| {
                let (u, rep) = regularized_solve(&dom, h, 0.0, &opts).unwrap();
                assert!(rep.converged, "ellipse solve at h = {h}: {}", rep.stop_reason);
                u
            })
            .collect();
        let (disk, rep) = regularized_solve(&Domain2D::unit_disk(), HS[1], 0.0, &opts).unwrap();
        assert!(rep.converged);
        Solutions { ellipse, disk }
    }
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn max(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn drifts(xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| (w[1] - w[0]).abs() / w[0].abs()).collect()
}

fn sci(xs: &[f64]) -> String {
    let v: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", v.join(", "))
}

fn smooth_periodic(seed: u64) -> impl Fn(f64, f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    move |t, y| {
        let a = std::f64::consts::PI * y / TH;
        let s = t / TH;
        c[0] + c[1] * s + c[2] * a.cos() + c[3] * s * (2.0 * a).sin() + c[4] * s * s * a.cos() + c[5] * (3.0 * s).sin()
    }
}

fn c1_disk_oracle() -> Outcome {
    let start = Instant::now();
    let disk = Domain2D::unit_disk();
    let o = RadialOracle::disk(Point::ORIGIN, 1.0).unwrap();
    let grid = Grid::build(&disk, 1.0 / 32.0, 0.0).unwrap();
    let v = GridField::from_fn(&grid, |k, p| if grid.is_interior(k) { o.v(p).unwrap() } else { f64::NAN });
    let w = renormalize(&v, &grid);
    let werr = max(w.values.iter().filter(|x| x.is_finite()).map(|x| (x + 1.0).abs()));
    let pr = probes(&disk, 8).unwrap();
    let fit = fit_expansion_with(|p| o.v(p).unwrap_or(f64::NAN), &pr, (0.01, 0.3), FitBasis::Cubic).unwrap();
    let c1 = max(fit.fits.iter().map(|f| (f.c1 - 2.0).abs()));
    let c2 = max(fit.fits.iter().map(|f| (f.c2 + 1.0).abs()));
    let secs = start.elapsed().as_secs_f64();
    (
        werr < 1e-10 && c1 < 1e-6 && c2 < 1e-6 && secs < 1.0,
        format!("|w+1| {werr:.1e}, |c1-2| {c1:.1e}, |c2+1| {c2:.1e}, {secs:.2}s"),
    )
}

fn c2_solver_vs_oracle() -> Outcome {
    let start = Instant::now();
    let disk = Domain2D::unit_disk();
    let o = RadialOracle::disk(Point::ORIGIN, 1.0).unwrap();
    let errs: Vec<f64> = HS
        .iter()
        .map(|&h| {
            let (u, rep) = trimmed_solve(&disk, 0.05, 2, h, &SolveOptions::default()).unwrap();
            assert!(rep.converged, "h = {h}: {} {:?} {:?}", rep.stop_reason, rep.residual_norms, rep.step_norms);
            let grid = Grid::build(&disk, h, 0.05).unwrap();
            max(grid.unknown_nodes().iter().map(|&k| {
                let p = grid.node_point(k);
                ((-u.values[k]).exp() - o.v(p).unwrap()).abs()
            }))
        })
        .collect();
    let ord = orders(&errs);
    let secs = start.elapsed().as_secs_f64();
    (
        min(&ord) >= 1.8 && errs[2] < 5e-4 && secs < 120.0,
        format!("v errors {}, orders {ord:.2?}, {secs:.1}s", sci(&errs)),
    )
}

fn c3_maximal_sequence() -> Outcome {
    let seq = maximal_sequence(&Domain2D::unit_disk(), &[1.0, 2.0, 4.0, 8.0], HS[0], &SolveOptions::default()).unwrap();
    let u8_0 = seq.fields[3].sample(Point::ORIGIN);
    let all_converged = seq.reports.iter().all(|r| r.converged);
    (
        all_converged && seq.max_violation < 1e-8 && (-0.05..=0.0).contains(&u8_0),
        format!("max decrease {:.1e}, u_8(0) = {u8_0:.4e}", seq.max_violation),
    )
}

fn c4_annulus_oracle() -> Outcome {
    let r0 = 0.5;
    let o = RadialOracle::annulus(Point::ORIGIN, r0).unwrap();
    let (lo, hi) = (r0 + 0.05, 1.0 / r0 - 0.05);
    let res = max((0..=200).map(|k| {
        let r = lo + (hi - lo) * k as f64 / 200.0;
        o.radial_residual(r, 1e-4).unwrap().abs()
    }));
    let edge = o.v_radial_unchecked(r0).abs().max(o.v_radial_unchecked(1.0 / r0).abs());
    (res < 1e-6 && edge < 1e-12, format!("radial residual {res:.1e}, boundary |v| {edge:.1e}"))
}

/// Sup over θ/4 ≤ T < θ and |Y| ≤ y_max; the row T = θ carries the
/// Neumann cut.
fn interior_sup(f: &CollarField, y_max: f64) -> f64 {
    let first = f.nt.div_ceil(4);
    max((first..f.nt).flat_map(|i| {
        (0..=f.ny())
            .filter(move |&j| f.coords(i, j).1.abs() <= y_max + 1e-12)
            .map(move |j| f.get(i, j).abs())
    }))
}

/// ‖(D−1)k̃ + k‖ and ‖L₀G[k] − k‖ on |Y| ≤ y_max.
fn identity_errors(k: &CollarField, y_max: f64) -> (f64, f64) {
    let kt = tilde_f2(k).unwrap();
    let mellin = interior_sup(&apply_d(&kt).zip_with(&kt, |a, b| a - b).zip_with(k, |a, b| a + b), y_max);
    let g = g_operator(k).unwrap();
    let inverse = interior_sup(&apply_l0(&g).zip_with(k, |a, b| a - b), y_max);
    (mellin, inverse)
}

fn c5_fuchsian_identities() -> Outcome {
    let start = Instant::now();
    let nts = [20usize, 40, 80, 160];
    let mut worst = f64::INFINITY;
    for seed in 0..10 {
        let f = smooth_periodic(seed);
        let (a, b): (Vec<f64>, Vec<f64>) = nts.iter().map(|&nt| identity_errors(&CollarField::from_fn(nt, TH, &f), TH)).unzip();
        worst = worst.min(min(&orders(&a))).min(min(&orders(&b)));
    }
    let dom = ellipse();
    let mut chart_errs = [Vec::new(), Vec::new(), Vec::new()];
    for &nt in &nts {
        let chart = CollarChart::new(&dom, 0, 0.7, TH, nt).unwrap();
        let (a, b) = identity_errors(&periodize(&minus_two_laplacian_d(&chart)), 0.5 * TH);
        chart_errs[0].push(a);
        chart_errs[1].push(b);
        chart_errs[2].push(w0_fixed_point(&chart, W0Options::default()).unwrap().residual);
    }
    let chart_orders: Vec<f64> = chart_errs.iter().map(|e| min(&orders(e))).collect();
    let mut trace_err = 0.0f64;
    for (d, s0) in [(Domain2D::circle(Point::ORIGIN, 2.0).unwrap(), 0.3), (dom, 0.0), (ellipse(), 0.7)] {
        let chart = CollarChart::new(&d, 0, s0, TH, 40).unwrap();
        let r = w0_fixed_point(&chart, W0Options::default()).unwrap();
        let kappa = d.curvature_on(0, s0).unwrap();
        trace_err = trace_err.max(((r.w0.at(0, 40) + kappa) / kappa).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst >= 1.8 && min(&chart_orders) >= 1.8 && trace_err <= 0.02 && secs < 120.0,
        format!(
            "min order over random k {worst:.2}, orders for -2Δd (Mellin, L0 G, L w0) {chart_orders:.2?} {} {} {}, trace error {trace_err:.1e}, {secs:.1}s",
            sci(&chart_errs[0]),
            sci(&chart_errs[1]),
            sci(&chart_errs[2])
        ),
    )
}

fn c6_operator_facts() -> Outcome {
    let errs: Vec<f64> = [10usize, 20, 40]
        .iter()
        .map(|&nt| {
            let f = CollarField::from_fn(nt, TH, |t, _| if t > 0.0 { t * t.ln() } else { 0.0 });
            apply_l0(&f)
                .zip_with(&CollarField::from_fn(nt, TH, |t, _| 3.0 * t), |a, b| a - b)
                .sup_norm_from(0.25 * TH)
        })
        .collect();
    let ord = orders(&errs);
    let dom = ellipse();
    let ratios: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&th| {
            let chart = CollarChart::new(&dom, 0, 0.7, th, 20).unwrap();
            let f = CollarField::from_fn(20, th, |t, y| {
                let (s, a) = (t / th, std::f64::consts::PI * y / th);
                s * s * a.cos() + (2.0 * s).sin() * (2.0 * a).sin()
            });
            apply_l1(&f, &chart).sup_norm() / c2_sharp_norm(&f, 0.0)
        })
        .collect();
    let halving: Vec<f64> = ratios.windows(2).map(|w| w[1] / w[0] / 0.5).collect();
    (
        min(&ord) >= 1.8 && halving.iter().all(|q| (q - 1.0).abs() <= 0.25),
        format!(
            "L0(T ln T) - 3T errors {} orders {ord:.2?}; |L1 f|/|f| {}, halving ratio / linear {halving:.3?}",
            sci(&errs),
            sci(&ratios)
        ),
    )
}

fn c7_envelope(sol: &Solutions) -> Outcome {
    let cases = [(Domain2D::unit_disk(), 0.3, &sol.disk), (ellipse(), 0.7, &sol.ellipse[1])];
    let mut ok = true;
    let mut notes = Vec::new();
    for (dom, s0, u) in cases {
        let th = 0.2;
        let chart = CollarChart::new(&dom, 0, s0, th, 40).unwrap();
        let w0 = w0_fixed_point(&chart, W0Options::default()).unwrap().w0;
        let w = renormalized_on_chart(u, &dom, &chart);
        let env = search_envelope(&w, &w0, &chart, th / 8.0).unwrap();
        let pass = env.a.is_some_and(|a| env.ratio <= a);
        ok &= pass;
        notes.push(format!(
            "{}: A = {:?}, sup|w-w0|/(d ln 1/d) = {:.3}, {} nodes",
            dom.description(),
            env.a,
            env.ratio,
            env.checked_nodes
        ));
    }
    (ok, notes.join("; "))
}

fn c8_asymptotics(sol: &Solutions) -> Outcome {
    let dom = ellipse();
    let pr = probes(&dom, 8).unwrap();
    let fine = &sol.ellipse[2];
    let v = hyperbolic_radius(fine);
    let g = gradient_limit(&v, &dom, &pr).unwrap();
    let glim: Vec<f64> = g.iter().map(|x| x.limit).collect();
    let grad_ok = glim.iter().all(|x| (1.98..=2.02).contains(x));
    let sups: Vec<Vec<f64>> = sol
        .ellipse
        .iter()
        .map(|u| log_ratio_check(u, &dom, &pr, (0.04, 0.2)).unwrap().iter().map(|r| r.sup).collect())
        .collect();
    let mut drift = 0.0f64;
    for p in 0..pr.len() {
        let per: Vec<f64> = sups.iter().map(|s| s[p]).collect();
        drift = drift.max(max(drifts(&per)));
    }
    let bounded = sups.iter().flatten().all(|x| x.is_finite());
    let fit = fit_expansion(&v, &dom, &pr, default_window(&dom, HS[2], 0.0), FitBasis::Cubic).unwrap();
    let c2 = fit.max_relative_c2_error();
    (
        grad_ok && bounded && drift < 0.2 && c2 <= 0.05,
        format!(
            "|∇v| limits in [{:.4}, {:.4}], log-ratio max {:.3} drift {drift:.3}, c2 relative error {c2:.3}",
            min(&glim),
            max(glim.iter().cloned()),
            max(sups.iter().flatten().cloned())
        ),
    )
}

fn c9_domain_monotonicity(sol: &Solutions) -> Outcome {
    let inner = RadialOracle::disk(Point::ORIGIN, 1.0).unwrap();
    let outer = RadialOracle::disk(Point::ORIGIN, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut exact_ok = true;
    for _ in 0..10_000 {
        let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if p.norm() < 1.0 {
            exact_ok &= outer.u(p).unwrap() <= inner.u(p).unwrap();
        }
    }
    let m = domain_monotonicity(&sol.ellipse[1], &sol.disk);
    (
        exact_ok && m.max_violation < 1e-3,
        format!("oracle ordering {}, solver violation {:.1e} over {} nodes", if exact_ok { "exact" } else { "violated" }, m.max_violation, m.compared_nodes),
    )
}

/// sup|w|, sup|T²∇w| and Hölder seminorms of Tw, T²∇w, T²∇²(w − w₀).
fn regularity_quantities(w: &CollarField, w0: &CollarField, t_min: f64) -> [f64; 5] {
    let d = derivatives(w);
    let (mut sw, mut sg) = (0.0f64, 0.0f64);
    let mut tw = w.clone();
    let mut gt = w.clone();
    let mut gy = w.clone();
    for i in 1..=w.nt {
        for j in 0..=w.ny() {
            let t = w.coords(i, j).0;
            tw.set(i, j, t * w.get(i, j));
            gt.set(i, j, t * t * d.t.get(i, j));
            gy.set(i, j, t * t * d.y.get(i, j));
            if t + 1e-12 >= t_min {
                sw = sw.max(w.get(i, j).abs());
                sg = sg.max(t * t * d.t.get(i, j).hypot(d.y.get(i, j)));
            }
        }
    }
    for f in [&mut tw, &mut gt, &mut gy] {
        f.trace = None;
    }
    let holder = |f: &CollarField, weight| holder_seminorm(f, 0.5, weight, t_min, 1).unwrap().seminorm;
    let diff = w.zip_with(w0, |a, b| a - b);
    [sw, sg, holder(&tw, 0), holder(&gt, 0).max(holder(&gy, 0)), holder(&diff, 2)]
}

fn c10_regularity(sol: &Solutions) -> Outcome {
    let dom = ellipse();
    let th = 0.2;
    let chart = CollarChart::new(&dom, 0, 0.7, th, 20).unwrap();
    let w0 = w0_fixed_point(&chart, W0Options::default()).unwrap().w0;
    let q: Vec<[f64; 5]> = sol
        .ellipse
        .iter()
        .map(|u| regularity_quantities(&renormalized_on_chart(u, &dom, &chart), &w0, th / 8.0))
        .collect();
    let names = ["sup|w|", "sup|d²∇w|", "[dw]", "[d²∇w]", "[T²∇²(w-w0)]"];
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let series: Vec<f64> = q.iter().map(|x| x[k]).collect();
        worst = worst.max(max(drifts(&series)));
        notes.push(format!("{name} {}", sci(&series)));
    }
    (worst < 0.2, format!("max drift {worst:.3}; {}", notes.join(", ")))
}

fn main() {
    let mut failed = 0;
    let mut run = |id: &str, title: &str, f: &dyn Fn() -> Outcome| {
        let (ok, detail) = f();
        println!("{} {id} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    };
    run("C1", "disk oracle exactness", &c1_disk_oracle);
    run("C2", "solver against the disk oracle", &c2_solver_vs_oracle);
    run("C3", "maximal sequence monotonicity", &c3_maximal_sequence);
    run("C4", "annulus oracle", &c4_annulus_oracle);
    run("C5", "collar identities and trace", &c5_fuchsian_identities);
    run("C6", "operator facts", &c6_operator_facts);
    let sol = Solutions::compute();
    run("C7", "sub/super envelope", &|| c7_envelope(&sol));
    run("C8", "asymptotic limits on the ellipse", &|| c8_asymptotics(&sol));
    run("C9", "domain monotonicity", &|| c9_domain_monotonicity(&sol));
    run("C10", "regularity trend", &|| c10_regularity(&sol));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

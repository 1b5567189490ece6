//! Sub- and super-solutions u_{±A} = −ln[2T + T²(w₀ ± A T ln T)] on a
//! collar and the search for an enveloping A.

use serde::Serialize;

use super::collar_ops::apply_l_chart;
use crate::error::{Error, Result};
use crate::field::{CollarField, GridField};
use crate::geometry::{CollarChart, Domain2D};

/// Candidate values of A, tried in order.
pub const A_CANDIDATES: [f64; 8] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 100.0];

fn t_log_t(t: f64) -> f64 {
    if t > 0.0 {
        t * t.ln()
    } else {
        0.0
    }
}

/// w_A = w₀ + A T ln T.
pub fn w_a(w0: &CollarField, a: f64) -> CollarField {
    let mut out = w0.clone();
    for i in 1..=w0.nt {
        let t = w0.coords(i, 0).0;
        for j in 0..=w0.ny() {
            out.set(i, j, w0.get(i, j) + a * t_log_t(t));
        }
    }
    out.trace = Some(w0.trace_values());
    out
}

/// u_A on rows T > 0.  Fails when 2 + T w_A ≤ 0 somewhere.
pub fn u_a(w0: &CollarField, a: f64) -> Result<CollarField> {
    let wa = w_a(w0, a);
    let mut out = wa.clone();
    out.trace = None;
    for i in 1..=w0.nt {
        let t = w0.coords(i, 0).0;
        for j in 0..=w0.ny() {
            let s = 2.0 + t * wa.get(i, j);
            if !(s > 0.0) {
                return Err(Error::Positivity(format!(
                    "2 + T w_A = {s:e} at T = {t}, A = {a}"
                )));
            }
            out.set(i, j, -(t * s).ln());
        }
    }
    Ok(out)
}

/// (u_A, u_{−A}).
pub fn sub_super(w0: &CollarField, a: f64) -> Result<(CollarField, CollarField)> {
    Ok((u_a(w0, a)?, u_a(w0, -a)?))
}

/// L w_A + (2 + T w_A)Δd, which should be ≥ T for large positive A and
/// ≤ −T for large negative A.
pub fn envelope_diagnostic(w0: &CollarField, a: f64, chart: &CollarChart) -> CollarField {
    let wa = w_a(w0, a);
    let lw = apply_l_chart(&wa, chart);
    let mut out = lw.clone();
    for i in 1..=w0.nt {
        let t = w0.coords(i, 0).0;
        for j in 0..=w0.ny() {
            out.set(i, j, lw.get(i, j) + (2.0 + t * wa.get(i, j)) * chart.laplacian_d(i, j));
        }
    }
    out
}

/// The renormalized unknown of a solver field at chart nodes, obtained by
/// interpolating the bounded quantity u + ln(2d).  Nodes whose stencil is
/// unavailable are NaN.
pub fn renormalized_on_chart(u: &GridField, domain: &Domain2D, chart: &CollarChart) -> CollarField {
    let phi = GridField {
        values: u
            .values
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                if x.is_finite() {
                    let d = domain.distance(u.node_point(k));
                    if d > 0.0 {
                        return x + (2.0 * d).ln();
                    }
                }
                f64::NAN
            })
            .collect(),
        ..u.clone()
    };
    let mut w = CollarField::on_chart(chart);
    for i in 1..=chart.nt {
        for j in 0..=chart.ny() {
            let t = chart.coords(i, j).0;
            let p = phi.sample(chart.point(i, j));
            let v = 2.0 * t * (-p).exp();
            w.set(i, j, (v - 2.0 * t) / (t * t));
        }
    }
    w
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Smallest candidate A for which the ordering holds, if any.
    pub a: Option<f64>,
    /// sup |w − w₀| / (T ln(1/T)) over the checked nodes.
    pub ratio: f64,
    pub checked_nodes: usize,
    /// Largest violation of u_{−A} ≤ u ≤ u_A at the reported A, or at the
    /// largest candidate when none works.
    pub max_violation: f64,
    /// Fraction of nodes where the diagnostic has the sign of a strict
    /// super/sub-solution at the reported A.
    pub diagnostic_sign_fraction: f64,
}

/// Searches A over [`A_CANDIDATES`] for u_{−A} ≤ u ≤ u_A at chart nodes with
/// T ≥ t_min and |Y| ≤ θ/2, given the solver's renormalized unknown `w`
/// at the same nodes.
pub fn search_envelope(w: &CollarField, w0: &CollarField, chart: &CollarChart, t_min: f64) -> Result<EnvelopeReport> {
    let mut nodes = Vec::new();
    let mut ratio = 0.0f64;
    for i in 1..=w.nt {
        for j in 0..=w.ny() {
            let (t, y) = w.coords(i, j);
            if t + 1e-12 < t_min || y.abs() > 0.5 * w.theta + 1e-12 || t >= 1.0 || !w.get(i, j).is_finite() {
                continue;
            }
            nodes.push((i, j));
            ratio = ratio.max((w.get(i, j) - w0.get(i, j)).abs() / (t * (1.0 / t).ln()));
        }
    }
    if nodes.is_empty() {
        return Err(Error::InsufficientSamples("no collar nodes to check".into()));
    }
    let u_of = |i: usize, j: usize| {
        let t = w.coords(i, j).0;
        -(2.0 * t + t * t * w.get(i, j)).ln()
    };
    let mut found = None;
    let mut violation = 0.0;
    for &a in &A_CANDIDATES {
        let (up, lo) = match sub_super(w0, a) {
            Ok(p) => p,
            Err(Error::Positivity(_)) => continue,
            Err(e) => return Err(e),
        };
        let mut viol = 0.0f64;
        for &(i, j) in &nodes {
            let u = u_of(i, j);
            viol = viol.max(lo.get(i, j) - u).max(u - up.get(i, j));
        }
        violation = viol;
        if viol <= 0.0 {
            found = Some(a);
            break;
        }
    }
    let a_diag = found.unwrap_or(A_CANDIDATES[A_CANDIDATES.len() - 1]);
    let plus = envelope_diagnostic(w0, a_diag, chart);
    let minus = envelope_diagnostic(w0, -a_diag, chart);
    let good = nodes
        .iter()
        .filter(|&&(i, j)| {
            let t = w.coords(i, j).0;
            plus.get(i, j) >= t && minus.get(i, j) <= -t
        })
        .count();
    Ok(EnvelopeReport {
        a: found,
        ratio,
        checked_nodes: nodes.len(),
        max_violation: violation.max(0.0),
        diagnostic_sign_fraction: good as f64 / nodes.len() as f64,
    })
}

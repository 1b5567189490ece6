//! Difference operators on collar fields: D = T∂_T, L₀ = (D+2)(D−1) + T²∂²_Y,
//! L₁ = 2T d_y (D+1)∂_Y + T(Δd)D, and L = L₀ + L₁.

use crate::field::CollarField;
use crate::geometry::CollarChart;

/// Second-order partial derivatives on rows 1..=nt.  Row 0 is the trace.
#[derive(Debug, Clone)]
pub struct CollarDerivatives {
    pub t: CollarField,
    pub tt: CollarField,
    pub y: CollarField,
    pub yy: CollarField,
    pub ty: CollarField,
}

/// ∂_T and ∂²_T of a column (index 0 = trace) at row i ≥ 1.
fn t_derivs(col: &[f64], i: usize, h: f64) -> (f64, f64) {
    let n = col.len() - 1;
    if i < n {
        (
            (col[i + 1] - col[i - 1]) / (2.0 * h),
            (col[i + 1] - 2.0 * col[i] + col[i - 1]) / (h * h),
        )
    } else {
        (
            (3.0 * col[n] - 4.0 * col[n - 1] + col[n - 2]) / (2.0 * h),
            (2.0 * col[n] - 5.0 * col[n - 1] + 4.0 * col[n - 2] - col[n - 3]) / (h * h),
        )
    }
}

/// ∂_Y and ∂²_Y of a row at column j, periodic or one-sided at the ends.
fn y_derivs(row: &[f64], j: usize, h: f64, periodic: bool) -> (f64, f64) {
    let m = row.len() - 1;
    if periodic {
        // column m duplicates column 0
        let jm = if j == 0 { m - 1 } else { j - 1 };
        let jp = if j == m { 1 } else { j + 1 };
        return (
            (row[jp] - row[jm]) / (2.0 * h),
            (row[jp] - 2.0 * row[j] + row[jm]) / (h * h),
        );
    }
    if j == 0 {
        (
            (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * h),
            (2.0 * row[0] - 5.0 * row[1] + 4.0 * row[2] - row[3]) / (h * h),
        )
    } else if j == m {
        (
            (3.0 * row[m] - 4.0 * row[m - 1] + row[m - 2]) / (2.0 * h),
            (2.0 * row[m] - 5.0 * row[m - 1] + 4.0 * row[m - 2] - row[m - 3]) / (h * h),
        )
    } else {
        (
            (row[j + 1] - row[j - 1]) / (2.0 * h),
            (row[j + 1] - 2.0 * row[j] + row[j - 1]) / (h * h),
        )
    }
}

pub fn derivatives(f: &CollarField) -> CollarDerivatives {
    let nt = f.nt;
    let ncol = f.ny() + 1;
    let h = f.spacing();
    let mut out = CollarDerivatives {
        t: f.clone(),
        tt: f.clone(),
        y: f.clone(),
        yy: f.clone(),
        ty: f.clone(),
    };
    // rows including the trace row 0
    let rows: Vec<Vec<f64>> = (0..=nt).map(|i| (0..ncol).map(|j| f.at(i, j)).collect()).collect();
    let fy_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (0..ncol).map(|j| y_derivs(r, j, h, f.periodic).0).collect())
        .collect();
    for j in 0..ncol {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let col_y: Vec<f64> = fy_rows.iter().map(|r| r[j]).collect();
        for i in 1..=nt {
            let (ft, ftt) = t_derivs(&col, i, h);
            let (fy, fyy) = y_derivs(&rows[i], j, h, f.periodic);
            out.t.set(i, j, ft);
            out.tt.set(i, j, ftt);
            out.y.set(i, j, fy);
            out.yy.set(i, j, fyy);
            out.ty.set(i, j, t_derivs(&col_y, i, h).0);
        }
    }
    for d in [&mut out.t, &mut out.tt, &mut out.y, &mut out.yy, &mut out.ty] {
        d.trace = None;
    }
    out
}

/// D f = T f_T on rows 1..=nt; the trace is 0.
pub fn apply_d(f: &CollarField) -> CollarField {
    let d = derivatives(f);
    let mut out = d.t;
    for i in 1..=f.nt {
        let t = f.coords(i, 0).0;
        for j in 0..=f.ny() {
            out.set(i, j, t * out.get(i, j));
        }
    }
    out.trace = Some(vec![0.0; f.ny() + 1]);
    out
}

/// L₀ f = T²(f_TT + f_YY) + 2T f_T − 2f; trace −2f(0, ·).
pub fn apply_l0(f: &CollarField) -> CollarField {
    let d = derivatives(f);
    let mut out = f.clone();
    for i in 1..=f.nt {
        let t = f.coords(i, 0).0;
        for j in 0..=f.ny() {
            let v = t * t * (d.tt.get(i, j) + d.yy.get(i, j)) + 2.0 * t * d.t.get(i, j) - 2.0 * f.get(i, j);
            out.set(i, j, v);
        }
    }
    out.trace = Some(f.trace_values().iter().map(|v| -2.0 * v).collect());
    out
}

/// L₁ f = 2T d_y (T f_TY + f_Y) + T² Δd f_T; trace 0.
pub fn apply_l1(f: &CollarField, chart: &CollarChart) -> CollarField {
    assert_eq!(f.nt, chart.nt, "field and chart resolutions differ");
    let d = derivatives(f);
    let mut out = f.clone();
    for i in 1..=f.nt {
        let t = f.coords(i, 0).0;
        for j in 0..=f.ny() {
            let v = 2.0 * t * chart.d_y(i, j) * (t * d.ty.get(i, j) + d.y.get(i, j))
                + t * t * chart.laplacian_d(i, j) * d.t.get(i, j);
            out.set(i, j, v);
        }
    }
    out.trace = Some(vec![0.0; f.ny() + 1]);
    out
}

/// L f = L₀ f + L₁ f on the chart.
pub fn apply_l_chart(f: &CollarField, chart: &CollarChart) -> CollarField {
    apply_l0(f).zip_with(&apply_l1(f, chart), |a, b| a + b)
}

/// The field −2Δd on the chart, with its trace.
pub fn minus_two_laplacian_d(chart: &CollarChart) -> CollarField {
    let mut k = CollarField::on_chart(chart);
    for i in 1..=chart.nt {
        for j in 0..=chart.ny() {
            k.set(i, j, -2.0 * chart.laplacian_d(i, j));
        }
    }
    k.trace = Some((0..=chart.ny()).map(|j| -2.0 * chart.laplacian_d(0, j)).collect());
    k
}

/// Discrete C²♯ sup norm: sup|f| + sup|T∇f| + sup|T²∇²f| over rows T ≥ t_min.
pub fn c2_sharp_norm(f: &CollarField, t_min: f64) -> f64 {
    let d = derivatives(f);
    let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
    for i in 1..=f.nt {
        let t = f.coords(i, 0).0;
        if t + 1e-12 < t_min {
            continue;
        }
        for j in 0..=f.ny() {
            s0 = s0.max(f.get(i, j).abs());
            s1 = s1.max(t * d.t.get(i, j).hypot(d.y.get(i, j)));
            let hess = (d.tt.get(i, j).powi(2) + 2.0 * d.ty.get(i, j).powi(2) + d.yy.get(i, j).powi(2)).sqrt();
            s2 = s2.max(t * t * hess);
        }
    }
    s0 + s1 + s2
}

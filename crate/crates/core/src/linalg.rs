//! Sparse matrices, a reusable sparse LU and a preconditioned BiCGSTAB.
//!
//! All reductions use fixed-size chunks summed in index order, so results do
//! not depend on the number of worker threads.

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

const CHUNK: usize = 4096;

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.chunks(CHUNK)
        .zip(b.chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .fold(0.0, |acc, s| acc + s)
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row entry lists; duplicate columns are summed.
    pub fn from_rows(n: usize, rows: impl IntoIterator<Item = Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        assert_eq!(row_ptr.len(), n + 1, "row count mismatch");
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|e| e.0 == i).map_or(0.0, |e| e.1))
            .collect()
    }

    fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.cols == other.cols
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                t.push(Triplet::new(i, c, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::LinearSolver(format!("matrix assembly failed: {e:?}")))
    }
}

/// Sparse LU that reuses its symbolic factorization while the sparsity
/// pattern stays the same.
#[derive(Default)]
pub struct DirectLu {
    pattern: Option<(CsrMatrix, SymbolicLu<usize>)>,
}

impl DirectLu {
    pub fn new() -> Self {
        faer::set_global_parallelism(faer::Par::Seq);
        DirectLu { pattern: None }
    }

    /// Solves A x = b with one step of iterative refinement.
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let fa = a.to_faer()?;
        let reuse = matches!(&self.pattern, Some((p, _)) if p.same_pattern(a));
        if !reuse {
            let sym = SymbolicLu::try_new(fa.symbolic())
                .map_err(|e| Error::LinearSolver(format!("symbolic LU failed: {e:?}")))?;
            let mut pat = a.clone();
            pat.vals.clear();
            self.pattern = Some((pat, sym));
        }
        let sym = self.pattern.as_ref().unwrap().1.clone();
        let lu = Lu::try_new_with_symbolic(sym, fa.as_ref())
            .map_err(|e| Error::LinearSolver(format!("numeric LU failed: {e:?}")))?;
        refined_solve(&lu, a, b)
    }
}

/// A numeric LU factorization kept for repeated right-hand sides.
pub struct FactoredLu {
    a: CsrMatrix,
    lu: Lu<usize, f64>,
}

impl FactoredLu {
    pub fn new(a: CsrMatrix) -> Result<Self> {
        faer::set_global_parallelism(faer::Par::Seq);
        let fa = a.to_faer()?;
        let sym = SymbolicLu::try_new(fa.symbolic())
            .map_err(|e| Error::LinearSolver(format!("symbolic LU failed: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(sym, fa.as_ref())
            .map_err(|e| Error::LinearSolver(format!("numeric LU failed: {e:?}")))?;
        Ok(FactoredLu { a, lu })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        refined_solve(&self.lu, &self.a, b)
    }
}

fn refined_solve(lu: &Lu<usize, f64>, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let sol = lu.solve(&rhs);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let mut ax = vec![0.0; n];
    a.matvec(&x, &mut ax);
    let r = Mat::<f64>::from_fn(n, 1, |i, _| b[i] - ax[i]);
    let corr = lu.solve(&r);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += corr[(i, 0)];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolver("LU solve produced non-finite values".into()));
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned BiCGSTAB for general (nonsymmetric) systems.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x0: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, KrylovStats)> {
    let n = a.n;
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = dinv[i] * v[i];
        }
    };
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let (mut ph, mut sh, mut s, mut t) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut res = norm2(&r) / bnorm;
    if res <= rel_tol {
        return Ok((x, KrylovStats { iterations: 0, relative_residual: res }));
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::LinearSolver(format!("BiCGSTAB breakdown at iteration {it}")));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut ph);
        a.matvec(&ph, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            return Err(Error::LinearSolver(format!("BiCGSTAB breakdown at iteration {it}")));
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm <= rel_tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            res = norm2(&s) / bnorm;
            return Ok((x, KrylovStats { iterations: it, relative_residual: res }));
        }
        precond(&s, &mut sh);
        a.matvec(&sh, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r) / bnorm;
        if !res.is_finite() {
            return Err(Error::LinearSolver("BiCGSTAB diverged".into()));
        }
        if res <= rel_tol {
            return Ok((x, KrylovStats { iterations: it, relative_residual: res }));
        }
    }
    Err(Error::LinearSolver(format!(
        "BiCGSTAB reached {max_iter} iterations with relative residual {res:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize, skew: f64) -> CsrMatrix {
        CsrMatrix::from_rows(
            n,
            (0..n).map(|i| {
                let mut row = vec![(i, 2.0 + 0.01)];
                if i > 0 {
                    row.push((i - 1, -1.0 - skew));
                }
                if i + 1 < n {
                    row.push((i + 1, -1.0 + skew));
                }
                row
            }),
        )
    }

    #[test]
    fn direct_and_krylov_agree() {
        let a = poisson_1d(200, 0.2);
        let b: Vec<f64> = (0..200).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let mut lu = DirectLu::new();
        let x = lu.solve(&a, &b).unwrap();
        let mut ax = vec![0.0; 200];
        a.matvec(&x, &mut ax);
        for i in 0..200 {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
        let (y, stats) = bicgstab(&a, &b, &vec![0.0; 200], 1e-12, 5000).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        for i in 0..200 {
            assert!((x[i] - y[i]).abs() < 1e-8 * (1.0 + x[i].abs()));
        }
        // second solve with the same pattern reuses the symbolic factorization
        let x2 = lu.solve(&a, &b).unwrap();
        assert_eq!(x, x2);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_rows(1, vec![vec![(0, 1.0), (0, 2.0)]]);
        assert_eq!(a.vals, vec![3.0]);
    }

    #[test]
    fn chunked_dot_is_order_fixed() {
        let a: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        assert_eq!(dot(&a, &a).to_bits(), dot(&a, &a).to_bits());
        assert!((dot(&a, &a) - a.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-9);
    }
}

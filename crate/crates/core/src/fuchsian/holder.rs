//! Discrete weighted Hölder seminorms of collar fields, sampled over dyadic
//! distance classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::collar_ops::derivatives;
use crate::error::{invalid, Result};
use crate::field::CollarField;

/// Node counts up to this use every pair.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;
pub const SAMPLED_PAIRS: usize = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct DyadicClass {
    /// Pair distances in [lo, hi).
    pub lo: f64,
    pub hi: f64,
    pub pairs: usize,
    pub max_quotient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    pub alpha: f64,
    pub weight: usize,
    pub seminorm: f64,
    /// (T, Y) of the two nodes realizing the maximum.
    pub witness: Option<((f64, f64), (f64, f64))>,
    pub classes: Vec<DyadicClass>,
    pub pairs: usize,
    pub exhaustive: bool,
    pub seed: u64,
}

struct Samples {
    points: Vec<(f64, f64)>,
    /// Grid indices, used to draw neighbours in the sampled mode.
    index: Vec<(usize, usize)>,
    values: Vec<Vec<f64>>,
    lookup: Vec<Option<usize>>,
    ncol: usize,
}

/// T^j ∇^j f at each node as a vector; j = 0 includes the trace row.
fn weighted_values(f: &CollarField, weight: usize, t_min: f64) -> Samples {
    let ncol = f.ny() + 1;
    let mut s = Samples {
        points: Vec::new(),
        index: Vec::new(),
        values: Vec::new(),
        lookup: vec![None; (f.nt + 1) * ncol],
        ncol,
    };
    let der = (weight > 0).then(|| derivatives(f));
    let first = if weight == 0 && t_min <= 0.0 && f.trace.is_some() { 0 } else { 1 };
    for i in first..=f.nt {
        let (t, _) = f.coords(i, 0);
        if t + 1e-12 < t_min {
            continue;
        }
        for j in 0..ncol {
            let v = match (&der, weight) {
                (None, _) => vec![f.at(i, j)],
                (Some(d), 1) => vec![t * d.t.get(i, j), t * d.y.get(i, j)],
                (Some(d), _) => {
                    let t2 = t * t;
                    vec![t2 * d.tt.get(i, j), t2 * d.ty.get(i, j), t2 * d.yy.get(i, j)]
                }
            };
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            s.lookup[i * ncol + j] = Some(s.points.len());
            s.points.push(f.coords(i, j));
            s.index.push((i, j));
            s.values.push(v);
        }
    }
    s
}

fn quotient(s: &Samples, a: usize, b: usize, alpha: f64) -> (f64, f64) {
    let (p, q) = (s.points[a], s.points[b]);
    let dist = (p.0 - q.0).hypot(p.1 - q.1);
    let diff: f64 = s.values[a]
        .iter()
        .zip(&s.values[b])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    (diff / dist.powf(alpha), dist)
}

fn class_of(dist: f64, h: f64) -> usize {
    (dist / h * (1.0 + 1e-12)).log2().floor().max(0.0) as usize
}

#[derive(Clone, Copy)]
struct Best {
    q: f64,
    a: usize,
    b: usize,
}

fn better(x: Best, y: Best) -> Best {
    if y.q > x.q || (y.q == x.q && (y.a, y.b) < (x.a, x.b)) {
        y
    } else {
        x
    }
}

/// Hölder seminorm of T^j ∇^j f with exponent `alpha` over nodes T ≥ t_min.
pub fn holder_seminorm(f: &CollarField, alpha: f64, weight: usize, t_min: f64, seed: u64) -> Result<HolderReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid("Hölder exponent must lie in (0, 1]");
    }
    if weight > 2 {
        return invalid("weight must be 0, 1 or 2");
    }
    let s = weighted_values(f, weight, t_min);
    let n = s.points.len();
    let h = f.spacing();
    let nclass = class_of(2.0f64.sqrt() * 2.0 * f.theta, h) + 1;
    let mut classes: Vec<DyadicClass> = (0..nclass)
        .map(|c| DyadicClass {
            lo: h * 2f64.powi(c as i32),
            hi: h * 2f64.powi(c as i32 + 1),
            pairs: 0,
            max_quotient: 0.0,
        })
        .collect();
    let exhaustive = n <= EXHAUSTIVE_LIMIT;
    let zero = Best { q: 0.0, a: 0, b: 0 };
    let mut best = zero;
    let mut total = 0usize;
    if exhaustive {
        let per_node: Vec<(Best, Vec<(usize, f64)>)> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut b_best = zero;
                let mut cls = vec![(0usize, 0.0f64); nclass];
                for b in a + 1..n {
                    let (q, dist) = quotient(&s, a, b, alpha);
                    let c = class_of(dist, h).min(nclass - 1);
                    cls[c].0 += 1;
                    cls[c].1 = cls[c].1.max(q);
                    b_best = better(b_best, Best { q, a, b });
                }
                (b_best, cls)
            })
            .collect();
        for (b, cls) in per_node {
            best = better(best, b);
            for (c, (cnt, m)) in cls.into_iter().enumerate() {
                classes[c].pairs += cnt;
                classes[c].max_quotient = classes[c].max_quotient.max(m);
                total += cnt;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = 2 * f.nt;
        let mut drawn = 0;
        while drawn < SAMPLED_PAIRS {
            let a = rng.gen_range(0..n);
            let c = rng.gen_range(0..nclass);
            let r = rng.gen_range((1usize << c)..(1usize << (c + 1))).min(span);
            let (di, dj) = if rng.gen_bool(0.5) {
                (r as isize, rng.gen_range(-(r as isize)..=r as isize))
            } else {
                (rng.gen_range(-(r as isize)..=r as isize), r as isize)
            };
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            let (i0, j0) = s.index[a];
            let (i, j) = (i0 as isize + sign * di, j0 as isize + sign * dj);
            if i < 0 || j < 0 || i as usize > f.nt || j as usize >= s.ncol {
                continue;
            }
            let Some(b) = s.lookup[i as usize * s.ncol + j as usize] else {
                continue;
            };
            drawn += 1;
            let (q, dist) = quotient(&s, a, b, alpha);
            let cl = class_of(dist, h).min(nclass - 1);
            classes[cl].pairs += 1;
            classes[cl].max_quotient = classes[cl].max_quotient.max(q);
            let (lo, hi) = (a.min(b), a.max(b));
            best = better(best, Best { q, a: lo, b: hi });
            total += 1;
        }
    }
    let witness = (best.q > 0.0).then(|| (s.points[best.a], s.points[best.b]));
    Ok(HolderReport {
        alpha,
        weight,
        seminorm: best.q,
        witness,
        classes,
        pairs: total,
        exhaustive,
        seed,
    })
}

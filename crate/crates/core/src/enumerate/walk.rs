//! Values of a positive definite form up to a bound.
//!
//! The first two variables form the inner binary `g`; for each outer vector
//! `k` (found by Fincke-Pohst on the Schur complement) the form restricts to
//! `g(y) + l·y + h(k)`. Translating `y` by a lattice vector moves `l` by an
//! element of `M Z^2` (`M` the doubled Gram of `g`), so only `det M` distinct
//! inner patterns exist. Each pattern is enumerated once as a bitset and the
//! outer vectors contribute shifted copies of it.

use std::collections::HashMap;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::bits::Bits;
use crate::error::{Error, Result};
use crate::forms::{isqrt, signature, QuadraticForm};

/// Binary quadratic polynomial `a y1^2 + b y1 y2 + c y2^2 + l1 y1 + l2 y2`.
#[derive(Debug, Clone, Copy)]
struct BinaryPoly {
    a: i64,
    b: i64,
    c: i64,
    l1: i64,
    l2: i64,
}

impl BinaryPoly {
    fn eval(&self, y1: i64, y2: i64) -> i128 {
        let (y1, y2) = (y1 as i128, y2 as i128);
        self.a as i128 * y1 * y1
            + self.b as i128 * y1 * y2
            + self.c as i128 * y2 * y2
            + self.l1 as i128 * y1
            + self.l2 as i128 * y2
    }

    fn disc(&self) -> f64 {
        (4 * self.a * self.c - self.b * self.b) as f64
    }

    /// Real minimizer and minimum.
    fn center(&self) -> (f64, f64, f64) {
        let d = self.disc();
        let (a, b, c, l1, l2) = (self.a as f64, self.b as f64, self.c as f64, self.l1 as f64, self.l2 as f64);
        // gradient zero: [2a b; b 2c] y = -l
        let y1 = (-2.0 * c * l1 + b * l2) / d;
        let y2 = (b * l1 - 2.0 * a * l2) / d;
        let q = 0.5 * (l1 * y1 + l2 * y2);
        (y1, y2, q)
    }

    /// Calls `emit(value)` for every integer point with value ≤ `qmax`.
    fn for_each_point(&self, qmax: i128, mut emit: impl FnMut(i128)) {
        let (_, c2, qstar) = self.center();
        let r = qmax as f64 - qstar;
        if r < -1e-6 {
            return;
        }
        let r = r.max(0.0) * (1.0 + 1e-12) + 1e-6;
        let d = self.disc();
        let span2 = (r * 4.0 * self.a as f64 / d).sqrt();
        let lo2 = (c2 - span2).floor() as i64 - 1;
        let hi2 = (c2 + span2).ceil() as i64 + 1;
        let a = self.a as f64;
        for y2 in lo2..=hi2 {
            // a y1^2 + (b y2 + l1) y1 + (c y2^2 + l2 y2 - qmax) <= 0
            let bb = self.b as f64 * y2 as f64 + self.l1 as f64;
            let cc = self.c as f64 * (y2 as f64).powi(2) + self.l2 as f64 * y2 as f64 - qmax as f64;
            let disc = bb * bb - 4.0 * a * cc;
            let mid = -bb / (2.0 * a);
            let half = if disc > 0.0 { disc.sqrt() / (2.0 * a) } else { 0.0 };
            let lo1 = (mid - half).floor() as i64 - 1;
            let hi1 = (mid + half).ceil() as i64 + 1;
            for y1 in lo1..=hi1 {
                let v = self.eval(y1, y2);
                if v <= qmax {
                    emit(v);
                }
            }
        }
    }

    fn integer_min(&self) -> i128 {
        let (c1, c2, _) = self.center();
        let start = self.eval(c1.round() as i64, c2.round() as i64);
        let mut best = start;
        self.for_each_point(start, |v| best = best.min(v));
        best
    }
}

/// Column-style Hermite normal form of the doubled inner Gram `M`:
/// `H = M U` lower triangular with `0 ≤ h21 < h22`, and `U` unimodular.
struct InnerLattice {
    m: [[i64; 2]; 2],
    h11: i64,
    h21: i64,
    h22: i64,
    u: [[i64; 2]; 2],
}

impl InnerLattice {
    fn new(a: i64, b: i64, c: i64) -> Self {
        let m = [[2 * a, b], [b, 2 * c]];
        let e = Integer::extended_gcd(&(2 * a), &b);
        let g = e.gcd;
        let mut u = [[e.x, -b / g], [e.y, 2 * a / g]];
        let mul = |m: &[[i64; 2]; 2], u: &[[i64; 2]; 2]| {
            let mut h = [[0i64; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    h[i][j] = m[i][0] * u[0][j] + m[i][1] * u[1][j];
                }
            }
            h
        };
        let mut h = mul(&m, &u);
        if h[0][0] < 0 {
            u[0][0] = -u[0][0];
            u[1][0] = -u[1][0];
        }
        if h[1][1] < 0 {
            u[0][1] = -u[0][1];
            u[1][1] = -u[1][1];
        }
        h = mul(&m, &u);
        let q = Integer::div_floor(&h[1][0], &h[1][1]);
        u[0][0] -= q * u[0][1];
        u[1][0] -= q * u[1][1];
        h = mul(&m, &u);
        debug_assert_eq!(h[0][1], 0);
        Self { m, h11: h[0][0], h21: h[1][0], h22: h[1][1], u }
    }

    /// Reduce `l` to `l' = l + M t` in the box `[0, h11) x [0, h22)`; returns `(l', t)`.
    fn reduce(&self, l: (i64, i64)) -> ((i64, i64), (i64, i64)) {
        // l' = l + H s, H = [[h11, 0], [h21, h22]]
        let s1 = -Integer::div_floor(&l.0, &self.h11);
        let r1 = l.0 + s1 * self.h11;
        let mid = l.1 + s1 * self.h21;
        let s2 = -Integer::div_floor(&mid, &self.h22);
        let r2 = mid + s2 * self.h22;
        let t = (self.u[0][0] * s1 + self.u[0][1] * s2, self.u[1][0] * s1 + self.u[1][1] * s2);
        debug_assert_eq!(
            (l.0 + self.m[0][0] * t.0 + self.m[0][1] * t.1, l.1 + self.m[1][0] * t.0 + self.m[1][1] * t.1),
            (r1, r2)
        );
        ((r1, r2), t)
    }
}

/// Real Cholesky-style decomposition used for Fincke-Pohst.
fn fincke_pohst(gram: &[Vec<f64>], bound: f64, mut visit: impl FnMut(&[i64])) {
    let m = gram.len();
    if m == 0 {
        visit(&[]);
        return;
    }
    let mut q = gram.to_vec();
    for i in 0..m {
        for j in i + 1..m {
            q[j][i] = q[i][j];
            q[i][j] /= q[i][i];
        }
        for k in i + 1..m {
            for l in k..m {
                q[k][l] -= q[k][i] * q[i][l];
            }
        }
    }
    let bound = bound * (1.0 + 1e-9) + 1e-6;
    let mut x = vec![0i64; m];
    fn rec(q: &[Vec<f64>], i: usize, rem: f64, x: &mut Vec<i64>, visit: &mut dyn FnMut(&[i64])) {
        let m = q.len();
        let center: f64 = -(i + 1..m).map(|j| q[i][j] * x[j] as f64).sum::<f64>();
        let span = (rem.max(0.0) / q[i][i]).sqrt();
        let lo = (center - span).floor() as i64 - 1;
        let hi = (center + span).ceil() as i64 + 1;
        for v in lo..=hi {
            let t = q[i][i] * (v as f64 - center).powi(2);
            if t > rem {
                continue;
            }
            x[i] = v;
            if i == 0 {
                visit(x);
            } else {
                rec(q, i - 1, rem - t, x, visit);
            }
        }
        x[i] = 0;
    }
    rec(&q, m - 1, bound, &mut x, &mut visit);
}

/// Gram matrix (f = x^T A x) of the outer variables' Schur complement,
/// as floating point.
fn schur_outer(f: &QuadraticForm) -> Vec<Vec<f64>> {
    let g = f.gram();
    let n = f.n();
    let (a, b, c) = (&g[0][0], &g[0][1], &g[1][1]);
    let det = a * c - b * b;
    // inverse of the inner block
    let inv = [[c / &det, -(b / &det)], [-(b / &det), a / &det]];
    let mut out = vec![vec![0.0; n - 2]; n - 2];
    for i in 2..n {
        for j in 2..n {
            let mut s: BigRational = g[i][j].clone();
            for r in 0..2 {
                for t in 0..2 {
                    s -= &g[i][r] * &inv[r][t] * &g[t][j];
                }
            }
            out[i - 2][j - 2] = s.to_f64().expect("finite");
        }
    }
    out
}

fn check_positive(f: &QuadraticForm) -> Result<()> {
    if !signature(f).is_positive_definite() {
        return Err(Error::Domain("form is not positive definite".into()));
    }
    Ok(())
}

/// Bitset of the values of a positive definite `f` in `[0, limit]`.
pub(crate) fn positive_values(f: &QuadraticForm, limit: u64) -> Result<Bits> {
    check_positive(f)?;
    let n = f.n();
    let mut out = Bits::new(limit as usize + 1);
    if n == 1 {
        let c = f.c(0, 0) as u64;
        let mut k = 1u64;
        while c * k * k <= limit {
            out.set((c * k * k) as usize);
            k += 1;
        }
        return Ok(out);
    }
    let (a, b, c) = (f.c(0, 0), f.c(0, 1), f.c(1, 1));
    let lat = InnerLattice::new(a, b, c);
    let x = limit as i128;

    // (pattern key, shift C) for each outer vector, deduplicated.
    let schur = schur_outer(f);
    let mut shifts: HashMap<(i64, i64), Vec<i128>> = HashMap::new();
    fincke_pohst(&schur, limit as f64, |k| {
        let l1: i64 = (2..n).map(|j| f.c(0, j) * k[j - 2]).sum();
        let l2: i64 = (2..n).map(|j| f.c(1, j) * k[j - 2]).sum();
        let mut h: i128 = 0;
        for i in 2..n {
            for j in i..n {
                h += f.c(i, j) as i128 * k[i - 2] as i128 * k[j - 2] as i128;
            }
        }
        let (key, t) = lat.reduce((l1, l2));
        let g_t = BinaryPoly { a, b, c, l1: 0, l2: 0 }.eval(t.0, t.1);
        let shift = g_t + l1 as i128 * t.0 as i128 + l2 as i128 * t.1 as i128 + h;
        shifts.entry(key).or_default().push(shift);
    });
    for v in shifts.values_mut() {
        v.sort_unstable();
        v.dedup();
    }

    // Pattern bit i <-> q = qmin + i, for q ≤ limit - min shift.
    let keys: Vec<(i64, i64)> = shifts.keys().copied().collect();
    let patterns: Vec<((i64, i64), i128, Bits)> = keys
        .par_iter()
        .map(|&key| {
            let poly = BinaryPoly { a, b, c, l1: key.0, l2: key.1 };
            let qmin = poly.integer_min();
            let cmin = shifts[&key][0];
            let qmax = x - cmin;
            let len = (qmax - qmin + 1).max(0) as usize;
            let mut bits = Bits::new(len);
            poly.for_each_point(qmax, |v| bits.set((v - qmin) as usize));
            (key, qmin, bits)
        })
        .collect();

    let jobs: Vec<(usize, i128)> = patterns
        .iter()
        .enumerate()
        .flat_map(|(i, (key, qmin, _))| shifts[key].iter().map(move |&c| (i, qmin + c)))
        .filter(|&(_, s)| s <= x)
        .collect();
    let len = limit as usize + 1;
    let merged = jobs
        .par_chunks(64.max(jobs.len() / (4 * rayon::current_num_threads()).max(1)))
        .map(|chunk| {
            let mut acc = Bits::new(len);
            for &(i, s) in chunk {
                debug_assert!(s >= 0);
                acc.or_shifted(&patterns[i].2, s as usize);
            }
            acc
        })
        .reduce(|| Bits::new(len), |mut a, b| {
            a.or_assign(&b);
            a
        });
    out.or_assign(&merged);
    out.clear(0);
    Ok(out)
}

/// Plain box enumeration over `|x_i| ≤ sqrt(limit (A^{-1})_ii)`. Slow; used
/// to validate the walk on small bounds.
pub fn naive_positive_values(f: &QuadraticForm, limit: u64) -> Result<Vec<u64>> {
    check_positive(f)?;
    let n = f.n();
    let inv = rational_inverse(&f.gram());
    let bounds: Vec<i64> = (0..n)
        .map(|i| {
            let b = (&inv[i][i] * BigRational::from_integer(limit.into())).floor().to_integer();
            isqrt(b.to_u128().expect("bound fits")) as i64
        })
        .collect();
    let mut seen = vec![false; limit as usize + 1];
    let mut x: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        let v = f.eval(&x);
        if v > 0 && v <= limit as i128 {
            seen[v as usize] = true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok((1..=limit).filter(|&m| seen[m as usize]).collect());
            }
            if x[i] < bounds[i] {
                x[i] += 1;
                break;
            }
            x[i] = -bounds[i];
            i += 1;
        }
    }
}

fn rational_inverse(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigRational::from_integer(1.into()) } else { BigRational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero()).expect("invertible");
        m.swap(col, piv);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in 0..2 * n {
                    let d = &m[col][j] * &factor;
                    m[r][j] -= d;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

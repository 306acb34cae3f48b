//! Residue-level searches used as independent oracles: a literal Hensel
//! witness search for Z_p-representability and a direct count of the values
//! hit mod p^m.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::numtheory::{valuation, vp_u64};

/// Modular evaluation context for `f` modulo `p^depth_max`.
struct ResidueForm {
    n: usize,
    p: u64,
    a: Vec<Vec<u64>>, // doubled Gram mod p^depth_max
    c: Vec<u64>,      // diagonal f-coefficients mod p^depth_max
    pw: Vec<u64>,     // p^0 ..= p^depth_max
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

impl ResidueForm {
    fn new(f: &QuadraticForm, p: u64, depth_max: u32) -> Result<Self> {
        let mut pw = vec![1u64];
        for _ in 0..depth_max {
            let next = pw.last().unwrap().checked_mul(p).filter(|&x| x < (1 << 62));
            pw.push(next.ok_or_else(|| Error::Domain("residue search modulus too large".into()))?);
        }
        let top = pw[depth_max as usize] as i128;
        let red = |x: i64| (x as i128).rem_euclid(top) as u64;
        let g = f.doubled_gram();
        let a = g.iter().map(|row| row.iter().map(|&x| red(x)).collect()).collect();
        let c = (0..f.n()).map(|i| red(f.c(i, i))).collect();
        Ok(Self { n: f.n(), p, a, c, pw })
    }

    /// f(x) mod p^d.
    fn eval(&self, x: &[u64], d: u32) -> u64 {
        let m = self.pw[d as usize];
        let mut s = 0u64;
        for i in 0..self.n {
            let xi = x[i] % m;
            s = (s + mulmod(self.c[i] % m, mulmod(xi, xi, m), m)) % m;
            for j in i + 1..self.n {
                // off-diagonal f-coefficient equals the doubled-Gram entry
                let t = mulmod(self.a[i][j] % m, mulmod(xi, x[j] % m, m), m);
                s = (s + t) % m;
            }
        }
        s
    }

    /// min_i v_p((2A x)_i) computed mod p^d, or None if the gradient vanishes mod p^d.
    fn grad_valuation(&self, x: &[u64], d: u32) -> Option<u32> {
        let m = self.pw[d as usize];
        let mut best: Option<u32> = None;
        for i in 0..self.n {
            let mut g = 0u64;
            for j in 0..self.n {
                g = (g + mulmod(self.a[i][j] % m, x[j] % m, m)) % m;
            }
            if g != 0 {
                let v = vp_u64(g, self.p);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        best
    }

    /// Digit vectors δ ∈ (Z/p)^n, odometer order.
    fn digits(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let total = (self.p as usize).pow(self.n as u32);
        (0..total).map(move |mut k| {
            let mut v = vec![0u64; self.n];
            for slot in v.iter_mut() {
                *slot = (k % self.p as usize) as u64;
                k /= self.p as usize;
            }
            v
        })
    }

    /// Depth-first search for a primitive x with f(x) ≡ target (mod p^d) and a
    /// Hensel certificate. `limit` caps the depth; returns true on the first
    /// certified witness or when depth `stop` is reached (if given).
    fn primitive_search(&self, target: u64, limit: u32, stop: Option<u32>) -> bool {
        let mut stack: Vec<(Vec<u64>, u32)> = Vec::new();
        for dv in self.digits() {
            if dv.iter().all(|&d| d == 0) {
                continue;
            }
            if self.eval(&dv, 1) == target % self.p {
                stack.push((dv, 1));
            }
        }
        while let Some((x, d)) = stack.pop() {
            if stop == Some(d) {
                return true;
            }
            if let Some(e) = self.grad_valuation(&x, d) {
                if d > 2 * e {
                    return true;
                }
            }
            if d >= limit {
                continue;
            }
            let pd = self.pw[d as usize];
            let m = self.pw[d as usize + 1];
            for dv in self.digits() {
                let y: Vec<u64> = x.iter().zip(&dv).map(|(&xi, &di)| xi + pd * di).collect();
                if self.eval(&y, d + 1) == target % m {
                    stack.push((y, d + 1));
                }
            }
        }
        false
    }
}

/// Literal Hensel witness search: for each j with 2j ≤ v_p(t), look for a
/// primitive x mod p^k with f(x) ≡ t/p^{2j} and k ≥ 2e+1, e the valuation of
/// the gradient. Exponential in n and the valuations involved; meant for small
/// forms and cross-checks.
pub fn hensel_search_represents(f: &QuadraticForm, p: u64, t: &BigInt) -> Result<bool> {
    if t.is_zero() {
        return Err(Error::Zero("target t"));
    }
    let det2 = f.det_doubled_gram() * 2;
    let e_max = valuation(&det2, p)?.v + 1;
    let depth = 2 * e_max + 1;
    let rf = ResidueForm::new(f, p, depth)?;
    let top = BigInt::from(rf.pw[depth as usize]);
    let vt = valuation(t, p)?.v;
    let mut cur = t.clone();
    for j in 0..=vt / 2 {
        if j > 0 {
            cur /= BigInt::from(p * p);
        }
        let target = num_integer::Integer::mod_floor(&cur, &top).to_u64().expect("fits");
        if rf.primitive_search(target, depth, None) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Measure of the residues a mod p^m with v_p(a) < k that f hits mod p^m.
///
/// Residues are grouped into orbits under multiplication by unit squares;
/// one solvability search is run per orbit.
pub fn local_density_bruteforce(f: &QuadraticForm, p: u64, k: u32, m: u32) -> Result<BigRational> {
    if m < k + 2 {
        return Err(Error::Domain(format!("modulus exponent {m} must be at least K+2 = {}", k + 2)));
    }
    let rf = ResidueForm::new(f, p, m)?;
    let mut memo: HashMap<(u64, u32), bool> = HashMap::new();
    let mut count: u64 = 0;
    for v in 0..k.min(m) {
        let rest = m - v;
        let reps: Vec<u64> = if p == 2 {
            match rest {
                1 => vec![1],
                2 => vec![1, 3],
                _ => vec![1, 3, 5, 7],
            }
        } else {
            vec![1, crate::numtheory::least_nonresidue(p)]
        };
        let units = rf.pw[rest as usize] / p * (p - 1);
        let orbit = units / reps.len() as u64;
        for u in reps {
            let a = rf.pw[v as usize] * u % rf.pw[m as usize];
            if solvable(&rf, a, m, &mut memo) {
                count += orbit;
            }
        }
    }
    Ok(BigRational::new(count.into(), rf.pw[m as usize].into()))
}

fn solvable(rf: &ResidueForm, a: u64, m: u32, memo: &mut HashMap<(u64, u32), bool>) -> bool {
    let a = a % rf.pw[m as usize];
    if m == 0 || a == 0 {
        return true;
    }
    if let Some(&r) = memo.get(&(a, m)) {
        return r;
    }
    // x primitive, or x = p y with p^2 | a.
    let mut res = rf.primitive_search(a, m, Some(m));
    if !res && m > 2 && a % (rf.p * rf.p) == 0 {
        res = solvable(rf, a / (rf.p * rf.p), m - 2, memo);
    }
    memo.insert((a, m), res);
    res
}

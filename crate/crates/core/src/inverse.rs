//! Inverse problem: which densities occur. Greedy products of local factors
//! `1 - 1/(2p+2)` landing in a prescribed interval, the ADC-attainable local
//! density sets, the parity precondition for globalizing local data, and
//! constructions with large 2-adic valuation of the density.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::{fmt_rational, is_prime, primes_up_to, rat, smallest_prime_factors};

/// Default bound on the primes the greedy construction may use.
pub const DEFAULT_PRIME_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyProductPlan {
    pub alpha: BigRational,
    pub beta: BigRational,
    /// Number of odd primes skipped before the first factor.
    pub start: usize,
    pub primes: Vec<u64>,
    pub product: BigRational,
}

impl Serialize for GreedyProductPlan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GreedyProductPlan", 3)?;
        st.serialize_field("primes", &self.primes)?;
        st.serialize_field("product", &fmt_rational(&self.product))?;
        st.serialize_field("interval", &[fmt_rational(&self.alpha), fmt_rational(&self.beta)])?;
        st.end()
    }
}

fn factor(p: u64) -> BigRational {
    rat(2 * p as i64 + 1, 2 * p as i64 + 2)
}

fn tree_product(v: &[u64]) -> BigUint {
    match v.len() {
        0 => BigUint::one(),
        1 => BigUint::from(v[0]),
        n => tree_product(&v[..n / 2]) * tree_product(&v[n / 2..]),
    }
}

/// Π (1 - 1/(2p+2)) over `primes`, exactly. Numerator and denominator are
/// cancelled prime by prime before multiplying, which avoids a gcd on
/// numbers with millions of bits.
pub fn product_of_factors(primes: &[u64]) -> BigRational {
    let Some(&max) = primes.iter().max() else {
        return BigRational::one();
    };
    let bound = (2 * max + 2) as usize;
    let spf = smallest_prime_factors(bound);
    let mut exp = vec![0i32; bound + 1];
    let mut add = |mut m: usize, sign: i32| {
        while m > 1 {
            let q = spf[m] as usize;
            exp[q] += sign;
            m /= q;
        }
    };
    for &p in primes {
        add((2 * p + 1) as usize, 1);
        add((2 * p + 2) as usize, -1);
    }
    let (mut num, mut den) = (Vec::new(), Vec::new());
    for (q, &e) in exp.iter().enumerate() {
        let side = if e > 0 { &mut num } else { &mut den };
        side.extend(std::iter::repeat(q as u64).take(e.unsigned_abs() as usize));
    }
    BigRational::new_raw(BigInt::from(tree_product(&num)), BigInt::from(tree_product(&den)))
}

pub fn greedy_interval_product(alpha: &BigRational, beta: &BigRational) -> Result<GreedyProductPlan> {
    greedy_interval_product_with_limit(alpha, beta, DEFAULT_PRIME_LIMIT)
}

/// Greedy construction: skip odd primes until `1 - a_n > α/β`, then
/// multiply successive factors until the product first drops below β.
///
/// Consecutive runs from K shrink like `1/sqrt(log p)`, so for small β they
/// need primes far beyond any budget. When that happens the plan falls back
/// to a subsequence of the same factors: walk the odd primes from 3, taking
/// each factor that keeps the product above α, until it drops below β. The
/// smallest product reachable this way with primes up to 10^7 is about 0.29.
pub fn greedy_interval_product_with_limit(
    alpha: &BigRational,
    beta: &BigRational,
    prime_limit: u64,
) -> Result<GreedyProductPlan> {
    if alpha < &BigRational::zero() || beta > &BigRational::one() || alpha >= beta {
        return Err(Error::Domain(format!(
            "need 0 ≤ α < β ≤ 1, got ({}, {})",
            fmt_rational(alpha),
            fmt_rational(beta)
        )));
    }
    // Most intervals need few primes; sieve further only when they do not.
    let mut limit = prime_limit.min(100_000);
    loop {
        let odd: Vec<u64> = primes_up_to(limit).into_iter().filter(|&p| p > 2).collect();
        if let Some(plan) = consecutive_run(alpha, beta, &odd) {
            return plan;
        }
        if limit == prime_limit {
            return skipping_run(alpha, beta, &odd).ok_or(Error::PrimeBudgetExceeded { limit: prime_limit });
        }
        limit = prime_limit.min(limit * 10);
    }
}

fn log_factor(p: u64) -> f64 {
    (-1.0 / (2.0 * p as f64 + 2.0)).ln_1p()
}

fn consecutive_run(alpha: &BigRational, beta: &BigRational, odd: &[u64]) -> Option<Result<GreedyProductPlan>> {
    let ratio = alpha / beta;
    // 1 - 1/(2p+2) > ratio  <=>  (2p + 2)(1 - ratio) > 1
    let gap = BigRational::one() - &ratio;
    let start = odd
        .iter()
        .position(|&p| BigRational::from_integer((2 * p + 2).into()) * &gap > BigRational::one())?;

    // Locate the stopping index with a floating log-sum, then settle it exactly.
    let log_beta = beta.to_f64().expect("finite").ln();
    let mut acc = 0.0f64;
    let mut end = None;
    for (i, &p) in odd.iter().enumerate().skip(start) {
        acc += log_factor(p);
        if acc < log_beta {
            end = Some(i + 1);
            break;
        }
    }
    let mut end = end?;
    let mut product = product_of_factors(&odd[start..end]);
    loop {
        if &product >= beta {
            if end == odd.len() {
                return None;
            }
            product *= factor(odd[end]);
            end += 1;
        } else if end > start + 1 && product < beta * factor(odd[end - 1]) {
            end -= 1;
            product /= factor(odd[end]);
        } else {
            break;
        }
    }
    let lower = beta * factor(odd[end - 1]);
    if !(product >= lower && lower > *alpha) {
        return Some(Err(Error::Internal("greedy bound β(1 - a_L) > α failed".into())));
    }
    Some(Ok(GreedyProductPlan {
        alpha: alpha.clone(),
        beta: beta.clone(),
        start,
        primes: odd[start..end].to_vec(),
        product,
    }))
}

fn skipping_run(alpha: &BigRational, beta: &BigRational, odd: &[u64]) -> Option<GreedyProductPlan> {
    let la = if alpha.is_zero() { f64::NEG_INFINITY } else { alpha.to_f64()?.ln() };
    let lb = beta.to_f64()?.ln();
    // Widen the float margins until the exact check agrees.
    for eps in [1e-9, 1e-7, 1e-5] {
        let mut acc = 0.0f64;
        let mut primes = Vec::new();
        for &p in odd {
            let next = acc + log_factor(p);
            if next > la + eps {
                acc = next;
                primes.push(p);
                if acc < lb - eps {
                    break;
                }
            }
        }
        if acc >= lb - eps {
            return None;
        }
        let product = product_of_factors(&primes);
        if &product > alpha && &product < beta {
            return Some(GreedyProductPlan {
                alpha: alpha.clone(),
                beta: beta.clone(),
                start: 0,
                primes,
                product,
            });
        }
    }
    None
}

/// Local densities attainable by locally ADC forms at `p`.
pub fn attainable_local_density_set(p: u64) -> Result<Vec<BigRational>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Ok(vec![rat(1, 2), rat(5, 6), rat(11, 12), rat(1, 1)]);
    }
    let q = p as i64;
    let mut v = vec![rat(1, 2), rat(q + 2, 2 * q + 2), rat(2 * q + 1, 2 * q + 2), rat(1, 1)];
    v.sort();
    Ok(v)
}

/// Hypothesis check for gluing local forms into a global one: `n ≥ 4`, or
/// `n = 3` with `#T` odd when `rs = 0` and even otherwise.
pub fn globalization_feasible(n: usize, r: usize, s: usize, support: &[u64], aniso: &[u64]) -> Result<bool> {
    if n < 3 {
        return Err(Error::Domain(format!("globalization needs n ≥ 3, got {n}")));
    }
    if r + s != n {
        return Err(Error::Arity(format!("signature ({r},{s}) does not sum to n = {n}")));
    }
    if let Some(p) = aniso.iter().find(|p| !support.contains(p)) {
        return Err(Error::Domain(format!("anisotropic prime {p} is outside the support set")));
    }
    if n >= 4 {
        return Ok(true);
    }
    let odd = aniso.len() % 2 == 1;
    Ok(if r * s == 0 { odd } else { !odd })
}

/// Local data for a global form with prescribed density: target δ_p per
/// prime, signature, and anisotropic set. Building the form itself is out of
/// scope; this is what such a construction would be asked to realize.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPrescription {
    pub targets: Vec<(u64, BigRational)>,
    pub signature: (usize, usize),
    pub anisotropic: Vec<u64>,
    pub product: BigRational,
}

/// Turns a greedy plan into a ternary or higher prescription, appending one
/// more prime for ternaries when the anisotropic set has the wrong parity.
pub fn prescription_from_plan(plan: &GreedyProductPlan, r: usize, s: usize) -> Result<LocalPrescription> {
    let n = r + s;
    let mut primes = plan.primes.clone();
    let mut product = plan.product.clone();
    if n == 3 && !globalization_feasible(n, r, s, &primes, &primes)? {
        let mut q = *primes.last().expect("nonempty plan") + 2;
        loop {
            if is_prime(q) && &product * factor(q) > plan.alpha {
                break;
            }
            q += 2;
        }
        primes.push(q);
        product *= factor(q);
    }
    if !globalization_feasible(n, r, s, &primes, &primes)? {
        return Err(Error::Internal("parity repair failed".into()));
    }
    Ok(LocalPrescription {
        targets: primes.iter().map(|&p| (p, factor(p))).collect(),
        signature: (r, s),
        anisotropic: primes,
        product,
    })
}

/// Least prime `p ≡ -1 (mod 2^{k+2})` and δ = (5/6)(p+1)/(2p), whose 2-adic
/// valuation is at least k.
pub fn v2_density_construction(k: u32) -> Result<(u64, BigRational)> {
    let m = 1u64
        .checked_shl(k + 2)
        .filter(|&m| m < 1 << 62)
        .ok_or_else(|| Error::Domain(format!("k = {k} is too large")))?;
    let mut p = m - 1;
    while !is_prime(p) {
        p = p.checked_add(m).ok_or_else(|| Error::Domain("prime search overflowed".into()))?;
    }
    let q = p as i64;
    Ok((p, rat(5, 6) * rat(q + 1, 2 * q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::rational_valuation;

    #[test]
    fn greedy_examples() {
        let plan = greedy_interval_product(&rat(0, 1), &rat(1, 1)).unwrap();
        assert_eq!(plan.primes, vec![3]);
        assert_eq!(plan.product, rat(7, 8));
        let plan = greedy_interval_product(&rat(1, 2), &rat(1, 1)).unwrap();
        assert!(plan.product > rat(1, 2) && plan.product < rat(1, 1));
        let plan = greedy_interval_product(&rat(6, 10), &rat(61, 100)).unwrap();
        assert!(plan.product > rat(6, 10) && plan.product < rat(61, 100));
        assert_eq!(plan.product, product_of_factors(&plan.primes));
        let primes = [3u64, 5, 7, 11, 13];
        let naive = primes.iter().fold(rat(1, 1), |acc, &p| acc * factor(p));
        assert_eq!(product_of_factors(&primes), naive);
        assert!(greedy_interval_product(&rat(1, 2), &rat(1, 2)).is_err());
        assert!(matches!(
            greedy_interval_product_with_limit(&rat(1, 10), &rat(1, 5), 1000),
            Err(Error::PrimeBudgetExceeded { .. })
        ));
        // Out of reach for a consecutive run; the subsequence fallback lands it.
        let plan = greedy_interval_product(&rat(3, 10), &rat(31, 100)).unwrap();
        assert_eq!(plan.start, 0);
        assert!(plan.product > rat(3, 10) && plan.product < rat(31, 100));
    }

    #[test]
    fn delta_sets() {
        assert_eq!(attainable_local_density_set(3).unwrap(), vec![rat(1, 2), rat(5, 8), rat(7, 8), rat(1, 1)]);
        assert_eq!(attainable_local_density_set(5).unwrap(), vec![rat(1, 2), rat(7, 12), rat(11, 12), rat(1, 1)]);
        assert_eq!(attainable_local_density_set(2).unwrap(), vec![rat(1, 2), rat(5, 6), rat(11, 12), rat(1, 1)]);
    }

    #[test]
    fn parity() {
        assert!(globalization_feasible(3, 3, 0, &[2], &[2]).unwrap());
        assert!(!globalization_feasible(3, 2, 1, &[5], &[5]).unwrap());
        assert!(globalization_feasible(4, 4, 0, &[3, 5], &[3]).unwrap());
        assert!(globalization_feasible(2, 2, 0, &[], &[]).is_err());
        let plan = greedy_interval_product(&rat(7, 10), &rat(3, 4)).unwrap();
        for (r, s) in [(3, 0), (2, 1)] {
            let pr = prescription_from_plan(&plan, r, s).unwrap();
            assert!(pr.product > rat(7, 10) && pr.product < rat(3, 4));
        }
    }

    #[test]
    fn two_adic_constructions() {
        assert_eq!(v2_density_construction(0).unwrap(), (3, rat(5, 9)));
        assert_eq!(v2_density_construction(3).unwrap(), (31, rat(40, 93)));
        for k in 0..8 {
            let (_, d) = v2_density_construction(k).unwrap();
            assert!(rational_valuation(&d, 2).unwrap() >= i64::from(k));
        }
    }
}

//! Integer and rational helpers: p-adic valuations, residue symbols,
//! Hilbert symbols, square classes of Q_p, primality and factoring.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A place of Q: the real place or a finite prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Real,
    Finite(u64),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "inf"),
            Place::Finite(p) => write!(f, "{p}"),
        }
    }
}

/// `input = unit * p^v` with `p ∤ unit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PValuation {
    pub v: u32,
    pub unit: BigInt,
}

pub fn valuation(n: &BigInt, p: u64) -> Result<PValuation> {
    if n.is_zero() {
        return Err(Error::ValuationOfZero);
    }
    let pb = BigInt::from(p);
    let mut unit = n.clone();
    let mut v = 0u32;
    loop {
        let (q, r) = unit.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        unit = q;
        v += 1;
    }
    Ok(PValuation { v, unit })
}

/// Valuation of a nonzero integer; panics on zero (internal use).
pub(crate) fn vp(n: &BigInt, p: u64) -> u32 {
    valuation(n, p).expect("nonzero").v
}

pub fn vp_u64(mut n: u64, p: u64) -> u32 {
    assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Valuation of a nonzero rational.
pub fn rational_valuation(x: &BigRational, p: u64) -> Result<i64> {
    if x.is_zero() {
        return Err(Error::ValuationOfZero);
    }
    Ok(vp(x.numer(), p) as i64 - vp(x.denom(), p) as i64)
}

pub fn mod_pow(b: u64, mut e: u64, m: u64) -> u64 {
    let mut r: u128 = 1 % m as u128;
    let mut base = (b % m) as u128;
    let m128 = m as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % m128;
        }
        base = base * base % m128;
        e >>= 1;
    }
    r as u64
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// Reduce a p-integral rational modulo `m` (a power of p).
pub fn rational_mod(x: &BigRational, m: &BigInt) -> Option<BigInt> {
    let inv = mod_inverse(x.denom(), m)?;
    Some((x.numer() * inv).mod_floor(m))
}

pub(crate) fn small_mod(a: &BigInt, p: u64) -> u64 {
    a.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits")
}

pub fn legendre_symbol(a: &BigInt, p: u64) -> Result<i8> {
    if p == 2 {
        return Err(Error::DyadicLegendre);
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(legendre_u64(small_mod(a, p), p))
}

pub(crate) fn legendre_u64(a: u64, p: u64) -> i8 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if mod_pow(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Least positive quadratic nonresidue modulo an odd prime.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre_u64(a, p) == -1).expect("odd prime has a nonresidue")
}

/// Integer in the same rational square class as `x` (numerator times denominator).
fn square_class_integer(x: &BigRational) -> BigInt {
    x.numer() * x.denom()
}

/// Hilbert symbol `(a, b)_v` for nonzero rationals.
pub fn hilbert_symbol(a: &BigRational, b: &BigRational, place: Place) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::Zero("Hilbert symbol argument"));
    }
    let p = match place {
        Place::Real => {
            return Ok(if a.is_negative() && b.is_negative() { -1 } else { 1 });
        }
        Place::Finite(p) => p,
    };
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let a = valuation(&square_class_integer(a), p)?;
    let b = valuation(&square_class_integer(b), p)?;
    let (alpha, beta) = (a.v as u64, b.v as u64);
    if p == 2 {
        let u = small_mod(&a.unit, 8);
        let w = small_mod(&b.unit, 8);
        let eps = |x: u64| ((x - 1) / 2) & 1;
        let omega = |x: u64| ((x * x - 1) / 8) & 1;
        let e = eps(u) * eps(w) + alpha * omega(w) + beta * omega(u);
        Ok(if e % 2 == 0 { 1 } else { -1 })
    } else {
        let mut s: i8 = if (alpha * beta * ((p - 1) / 2)) % 2 == 0 { 1 } else { -1 };
        if beta % 2 == 1 {
            s *= legendre_u64(small_mod(&a.unit, p), p);
        }
        if alpha % 2 == 1 {
            s *= legendre_u64(small_mod(&b.unit, p), p);
        }
        Ok(s)
    }
}

/// Whether a nonzero rational is a square in the completion at `place`.
pub fn is_local_square(x: &BigRational, place: Place) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::Zero("square test"));
    }
    match place {
        Place::Real => Ok(x.is_positive()),
        Place::Finite(p) => {
            let c = square_class_of(x, p)?;
            Ok(c.index == 0 && c.v % 2 == 0)
        }
    }
}

/// Square classes of Q_p with a fixed ordering of representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareClassSystem {
    pub p: u64,
    pub reps: Vec<i64>,
    pub nu: u32,
}

/// Position of a rational in a [`SquareClassSystem`]: class index and valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SquareClass {
    pub index: usize,
    pub v: i64,
}

impl SquareClassSystem {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p == 2 {
            return Ok(Self { p, reps: vec![1, 3, 5, 7, 2, 6, 10, 14], nu: 4 });
        }
        let r = least_nonresidue(p) as i64;
        let pi = p as i64;
        Ok(Self { p, reps: vec![1, r, pi, r * pi], nu: 2 })
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Valuation of the representative (0 or 1).
    pub fn rep_valuation(&self, index: usize) -> u32 {
        if index < self.len() / 2 {
            0
        } else {
            1
        }
    }

    /// Class index of `p^parity * unit` where `unit` is a p-adic unit given by an integer.
    pub fn class_of_unit(&self, parity: u32, unit: &BigInt) -> usize {
        let half = self.len() / 2;
        let base = if parity % 2 == 1 { half } else { 0 };
        if self.p == 2 {
            let u = small_mod(unit, 8);
            base + ((u - 1) / 2) as usize
        } else {
            let l = legendre_u64(small_mod(unit, self.p), self.p);
            base + usize::from(l == -1)
        }
    }

    pub fn classify(&self, x: &BigRational) -> Result<SquareClass> {
        if x.is_zero() {
            return Err(Error::ValuationOfZero);
        }
        let pv = valuation(&square_class_integer(x), self.p)?;
        let v = rational_valuation(x, self.p)?;
        let parity = (v.rem_euclid(2)) as u32;
        Ok(SquareClass { index: self.class_of_unit(parity, &pv.unit), v })
    }
}

pub fn square_class_of(x: &BigRational, p: u64) -> Result<SquareClass> {
    SquareClassSystem::new(p)?.classify(x)
}

// ---------------------------------------------------------------------------
// Primes

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &MR_BASES {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &MR_BASES {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn big_is_probable_prime(n: &BigUint) -> bool {
    if let Some(s) = n.to_u64() {
        return is_prime(s);
    }
    let one = BigUint::one();
    let nm1 = n - &one;
    let mut d = nm1.clone();
    let mut s = 0;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'outer: for &a in &MR_BASES {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == nm1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: &BigUint) -> BigUint {
    let one = BigUint::one();
    let mut c = BigUint::one();
    loop {
        let f = |x: &BigUint| (x * x + &c) % n;
        let (mut x, mut y) = (BigUint::from(2u32), BigUint::from(2u32));
        let mut d = one.clone();
        while d == one {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            d = diff.gcd(n);
        }
        if &d != n {
            return d;
        }
        c += 1u32;
    }
}

fn factor_big_into(n: BigUint, out: &mut Vec<BigUint>) {
    if n.is_one() {
        return;
    }
    if big_is_probable_prime(&n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(&n);
    let q = &n / &d;
    factor_big_into(d, out);
    factor_big_into(q, out);
}

/// Prime factorization of `|n|` as sorted (prime, exponent) pairs.
pub fn factorize(n: &BigInt) -> Result<Vec<(u64, u32)>> {
    if n.is_zero() {
        return Err(Error::Zero("factorization"));
    }
    let mut m = n.magnitude().clone();
    let mut out: Vec<(u64, u32)> = Vec::new();
    let push = |p: u64, e: u32, out: &mut Vec<(u64, u32)>| {
        if let Some(slot) = out.iter_mut().find(|(q, _)| *q == p) {
            slot.1 += e;
        } else {
            out.push((p, e));
        }
    };
    let mut q = 2u64;
    while q < 1 << 16 {
        let qb = BigUint::from(q);
        if &qb * &qb > m {
            break;
        }
        let mut e = 0;
        while (&m % &qb).is_zero() {
            m /= &qb;
            e += 1;
        }
        if e > 0 {
            push(q, e, &mut out);
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if !m.is_one() {
        let mut big = Vec::new();
        factor_big_into(m, &mut big);
        for f in big {
            let p = f
                .to_u64()
                .ok_or_else(|| Error::Domain(format!("prime factor {f} exceeds 64 bits")))?;
            push(p, 1, &mut out);
        }
    }
    out.sort_unstable();
    Ok(out)
}

pub fn prime_divisors(n: &BigInt) -> Result<Vec<u64>> {
    Ok(factorize(n)?.into_iter().map(|(p, _)| p).collect())
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Smallest-prime-factor table for `0..=limit`.
pub fn smallest_prime_factors(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    for i in 2..=limit {
        if spf[i] == 0 {
            let mut j = i;
            while j <= limit {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

// ---------------------------------------------------------------------------
// Rationals

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int_rat(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `a/b` in lowest terms, always with an explicit denominator.
pub fn fmt_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

pub fn pow_rat(p: u64, e: i64) -> BigRational {
    let base = BigInt::from(p);
    if e >= 0 {
        int_rat(num_traits::pow(base, e as usize))
    } else {
        BigRational::new(BigInt::one(), num_traits::pow(base, (-e) as usize))
    }
}

pub fn big_pow(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&b(12), 2).unwrap(), PValuation { v: 2, unit: b(3) });
        assert_eq!(valuation(&b(7), 3).unwrap(), PValuation { v: 0, unit: b(7) });
        // 2023 = 7 * 17^2
        assert_eq!(valuation(&b(2023), 7).unwrap(), PValuation { v: 1, unit: b(289) });
        assert_eq!(valuation(&b(2023), 17).unwrap(), PValuation { v: 2, unit: b(7) });
        assert_eq!(valuation(&b(0), 5), Err(Error::ValuationOfZero));
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_symbol(&b(2), 7).unwrap(), 1);
        assert_eq!(legendre_symbol(&b(14), 7).unwrap(), 0);
        assert_eq!(legendre_symbol(&b(3), 2), Err(Error::DyadicLegendre));
        for p in [3u64, 5, 7, 11, 13, 97] {
            let r = least_nonresidue(p);
            assert_eq!(legendre_symbol(&b(r as i64), p).unwrap(), -1);
            assert_eq!(legendre_symbol(&b(1), p).unwrap(), 1);
            let squares: Vec<u64> = (1..p).map(|x| x * x % p).collect();
            for a in 1..p {
                let expect = if squares.contains(&a) { 1 } else { -1 };
                assert_eq!(legendre_u64(a, p), expect);
            }
        }
    }

    /// Primitive zero of `a x^2 + b y^2 - z^2` modulo `p^k` whose gradient
    /// valuation `e` satisfies `2e + 1 <= k`, for integers a, b of valuation <= 1.
    fn hilbert_oracle(a: i64, b: i64, p: u64) -> i8 {
        let k = if p == 2 { 5 } else { 3 };
        let m = p.pow(k) as i64;
        let vm = |x: i64| -> u32 {
            if x.rem_euclid(m) == 0 {
                k
            } else {
                vp_u64(x.rem_euclid(m) as u64, p)
            }
        };
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    if x % p as i64 == 0 && y % p as i64 == 0 && z % p as i64 == 0 {
                        continue;
                    }
                    let f = (a * x * x + b * y * y - z * z).rem_euclid(m);
                    if f != 0 {
                        continue;
                    }
                    let e = vm(2 * a * x).min(vm(2 * b * y)).min(vm(2 * z));
                    if 2 * e + 1 <= k {
                        return 1;
                    }
                }
            }
        }
        -1
    }

    #[test]
    fn hilbert_matches_bruteforce() {
        for p in [2u64, 3, 5] {
            let r = if p == 2 { 3 } else { least_nonresidue(p) as i64 };
            let pi = p as i64;
            let mut classes = vec![1, -1, r, -r, pi, -pi, r * pi, -r * pi];
            if p == 2 {
                classes = vec![1, 3, 5, 7, 2, 6, 10, 14, -1, -2];
            }
            for &x in &classes {
                for &y in &classes {
                    let h = hilbert_symbol(&int_rat(x), &int_rat(y), Place::Finite(p)).unwrap();
                    assert_eq!(h, hilbert_oracle(x, y, p), "({x},{y})_{p}");
                }
            }
        }
    }

    #[test]
    fn hilbert_examples() {
        let m1 = int_rat(-1);
        assert_eq!(hilbert_symbol(&m1, &m1, Place::Real).unwrap(), -1);
        assert_eq!(hilbert_symbol(&m1, &m1, Place::Finite(2)).unwrap(), -1);
        assert_eq!(hilbert_symbol(&int_rat(1), &rat(-3, 7), Place::Finite(7)).unwrap(), 1);
        assert!(hilbert_symbol(&int_rat(0), &m1, Place::Real).is_err());
    }

    #[test]
    fn square_class_examples() {
        let c = square_class_of(&int_rat(9), 3).unwrap();
        assert_eq!((c.index, c.v), (0, 2));
        let c = square_class_of(&int_rat(-4), 2).unwrap();
        assert_eq!((c.index, c.v), (3, 2)); // class of 7
        for p in [3u64, 5, 7] {
            let sys = SquareClassSystem::new(p).unwrap();
            let r = sys.reps[1];
            let c = sys.classify(&int_rat(r * (p as i64).pow(3))).unwrap();
            assert_eq!((c.index, c.v), (3, 3));
        }
        assert_eq!(SquareClassSystem::new(5).unwrap().reps, vec![1, 2, 5, 10]);
        assert_eq!(SquareClassSystem::new(7).unwrap().reps, vec![1, 3, 7, 21]);
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(&b(2023)).unwrap(), vec![(7, 1), (17, 2)]);
        assert_eq!(factorize(&b(-360)).unwrap(), vec![(2, 3), (3, 2), (5, 1)]);
        let big = BigInt::from(1_000_000_007u64) * BigInt::from(998_244_353u64);
        assert_eq!(factorize(&big).unwrap(), vec![(998_244_353, 1), (1_000_000_007, 1)]);
        assert!(is_prime(18446744073709551557));
        assert!(!is_prime(3215031751));
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn rational_format_roundtrip() {
        let x = rat(10, -4);
        assert_eq!(fmt_rational(&x), "-5/2");
        assert_eq!(parse_rational("-5/2").unwrap(), x);
        assert_eq!(fmt_rational(&int_rat(1)), "1/1");
        assert!(parse_rational("1/0").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn place() -> impl Strategy<Value = Place> {
            prop_oneof![
                Just(Place::Real),
                Just(Place::Finite(2)),
                Just(Place::Finite(3)),
                Just(Place::Finite(5)),
                Just(Place::Finite(7)),
            ]
        }

        fn nz() -> impl Strategy<Value = i64> {
            (-60i64..60).prop_filter("nonzero", |x| *x != 0)
        }

        proptest! {
            #[test]
            fn hilbert_bimultiplicative(a in nz(), a2 in nz(), b in nz(), v in place()) {
                let h = |x: i64, y: i64| hilbert_symbol(&int_rat(x), &int_rat(y), v).unwrap();
                prop_assert_eq!(h(a * a2, b), h(a, b) * h(a2, b));
                prop_assert_eq!(h(a, b), h(b, a));
                prop_assert_eq!(h(a, -a), 1);
            }

            #[test]
            fn square_class_stable_under_squares(x in nz(), k in 1i64..=20, p in prop_oneof![Just(2u64), Just(3), Just(5), Just(7)]) {
                let c1 = square_class_of(&int_rat(x), p).unwrap();
                let c2 = square_class_of(&int_rat(x * k * k), p).unwrap();
                prop_assert_eq!(c1.index, c2.index);
                prop_assert_eq!(c2.v - c1.v, 2 * vp_u64(k as u64, p) as i64);
            }

            #[test]
            fn legendre_multiplicative(a in -500i64..500, b in -500i64..500, p in prop_oneof![Just(3u64), Just(5), Just(7), Just(11), Just(101)]) {
                let l = |x: i64| legendre_symbol(&BigInt::from(x), p).unwrap();
                prop_assert_eq!(l(a * b), l(a) * l(b));
            }
        }
    }
}

//! Ground truth for D_f(X): exact enumeration of represented integers,
//! exception sets E_f(X) = D_{f,loc}(X) \ D_f(X), and empirical densities.

mod bits;
mod walk;

use std::io::{self, Read, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{
    binary_delta, gauss_reduce_isotropic_binary, is_perfect_square, primitive_part, signature, QuadraticForm,
    ReducedIsotropicBinary,
};
use crate::global::LocalMembership;
use crate::numtheory::{factorize, smallest_prime_factors};
use bits::Bits;

pub use walk::naive_positive_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LatticeWalk,
    Divisor,
    /// Local membership standing in for representation; a superset of D_f(X)
    /// in general, exact for regular forms.
    LocalProxy,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::LatticeWalk => "lattice-walk",
            Method::Divisor => "divisor",
            Method::LocalProxy => "local-proxy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sides {
    Positive,
    Negative,
    Both,
}

/// Represented integers in `[-X, X] \ {0}`.
#[derive(Debug, Clone)]
pub struct RepresentedSet {
    pub limit: u64,
    pub method: Method,
    pub sides: Sides,
    pos: Bits,
    neg: Bits,
}

impl RepresentedSet {
    fn empty(limit: u64, method: Method, sides: Sides) -> Self {
        let len = limit as usize + 1;
        Self { limit, method, sides, pos: Bits::new(len), neg: Bits::new(len) }
    }

    pub fn contains(&self, m: i64) -> bool {
        let a = m.unsigned_abs();
        if m == 0 || a > self.limit {
            return false;
        }
        if m > 0 {
            self.pos.get(a as usize)
        } else {
            self.neg.get(a as usize)
        }
    }

    pub fn count(&self) -> u64 {
        self.pos.count_ones() + self.neg.count_ones()
    }

    /// Members in increasing order.
    pub fn members(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self.neg.ones().map(|i| -(i as i64)).collect();
        out.reverse();
        out.extend(self.pos.ones().map(|i| i as i64));
        out
    }

    /// Density normalized per side: |D ∩ [1,X]| / X for positive forms,
    /// |D ∩ [-X,-1]| / X for negative ones, |D ∩ [-X,X]| / 2X otherwise.
    pub fn empirical_density(&self) -> BigRational {
        let denom = match self.sides {
            Sides::Both => 2 * self.limit,
            _ => self.limit,
        };
        BigRational::new(self.count().into(), denom.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExceptionSet {
    pub limit: u64,
    pub members: Vec<i64>,
}

fn sides_of(f: &QuadraticForm) -> Sides {
    let sig = signature(f);
    if sig.is_positive_definite() {
        Sides::Positive
    } else if sig.is_negative_definite() {
        Sides::Negative
    } else {
        Sides::Both
    }
}

/// Exact D_f ∩ [1, X] for a positive definite form.
pub fn represented_set_positive(f: &QuadraticForm, limit: u64) -> Result<RepresentedSet> {
    if limit == 0 {
        return Err(Error::Domain("bound must be at least 1".into()));
    }
    let mut set = RepresentedSet::empty(limit, Method::LatticeWalk, Sides::Positive);
    set.pos = walk::positive_values(f, limit)?;
    Ok(set)
}

/// Representation of `m` by a primitive isotropic binary form, as a vector
/// in the original coordinates.
pub fn isotropic_binary_witness(f: &QuadraticForm, m: i64) -> Result<Option<[i64; 2]>> {
    if m == 0 {
        return Err(Error::Zero("m"));
    }
    let (content, g) = primitive_part(f);
    if m % content != 0 {
        return Ok(None);
    }
    let red = gauss_reduce_isotropic_binary(&g)?;
    let m = m / content;
    for d in divisors(m.unsigned_abs())? {
        for x in [d as i64, -(d as i64)] {
            let k = m / x;
            if (k - red.a * x).rem_euclid(red.b) == 0 {
                let y = (k - red.a * x) / red.b;
                return Ok(Some(to_original(&red, x, y)));
            }
        }
    }
    Ok(None)
}

/// Divisor criterion: does the isotropic binary `f` represent `m`?
pub fn represents_isotropic_binary(f: &QuadraticForm, m: i64) -> Result<bool> {
    Ok(isotropic_binary_witness(f, m)?.is_some())
}

fn to_original(red: &ReducedIsotropicBinary, x: i64, y: i64) -> [i64; 2] {
    let w = red.witness;
    [w[0][0] * x + w[0][1] * y, w[1][0] * x + w[1][1] * y]
}

fn divisors(n: u64) -> Result<Vec<u64>> {
    let mut out = vec![1u64];
    for (p, e) in factorize(&BigInt::from(n))? {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        for &d in &out {
            let mut q = d;
            for _ in 0..=e {
                next.push(q);
                q *= p;
            }
        }
        out = next;
    }
    out.sort_unstable();
    Ok(out)
}

fn isotropic_binary_set(f: &QuadraticForm, limit: u64) -> Result<RepresentedSet> {
    let (content, g) = primitive_part(f);
    let red = gauss_reduce_isotropic_binary(&g)?;
    let (a, b) = (red.a as i128, red.b as i128);
    let x_lim = (limit / content.unsigned_abs()) as i128;
    let len = limit as usize + 1;
    let c = content as i128;
    // m = x (A x + B y): for fixed x, the cofactor k runs over A x + B Z.
    let (pos, neg) = (1..=x_lim)
        .into_par_iter()
        .flat_map_iter(|x| [x, -x])
        .fold(
            || (Bits::new(len), Bits::new(len)),
            |(mut pos, mut neg), x| {
                let kmax = x_lim / x.abs();
                let r = (a * x).rem_euclid(b);
                let mut k = r - ((r + kmax) / b) * b;
                while k <= kmax {
                    if k != 0 {
                        let m = c * x * k;
                        if m > 0 {
                            pos.set(m as usize);
                        } else {
                            neg.set((-m) as usize);
                        }
                    }
                    k += b;
                }
                (pos, neg)
            },
        )
        .reduce(
            || (Bits::new(len), Bits::new(len)),
            |(mut p1, mut n1), (p2, n2)| {
                p1.or_assign(&p2);
                n1.or_assign(&n2);
                (p1, n1)
            },
        );
    Ok(RepresentedSet { limit, method: Method::Divisor, sides: Sides::Both, pos, neg })
}

fn local_proxy_set(f: &QuadraticForm, limit: u64) -> Result<RepresentedSet> {
    let lm = LocalMembership::new(f)?;
    let mut set = RepresentedSet::empty(limit, Method::LocalProxy, sides_of(f));
    for m in 1..=limit as i64 {
        if lm.contains_i64(m, None) {
            set.pos.set(m as usize);
        }
        if lm.contains_i64(-m, None) {
            set.neg.set(m as usize);
        }
    }
    Ok(set)
}

fn is_isotropic_binary(f: &QuadraticForm) -> Result<bool> {
    Ok(f.n() == 2 && is_perfect_square(binary_delta(f)?))
}

/// Ground-truth represented set in `[-X, X]`. Definite forms use the lattice
/// walk, isotropic binaries the divisor criterion, and indefinite forms with
/// n ≥ 4 (which are regular) local membership. Indefinite ternaries are
/// refused unless `allow_proxy` is set, in which case the local superset is
/// returned and tagged as such.
pub fn represented_set(f: &QuadraticForm, limit: u64, allow_proxy: bool) -> Result<RepresentedSet> {
    if limit == 0 {
        return Err(Error::Domain("bound must be at least 1".into()));
    }
    match sides_of(f) {
        Sides::Positive => represented_set_positive(f, limit),
        Sides::Negative => {
            let mut s = represented_set_positive(&f.negated(), limit)?;
            std::mem::swap(&mut s.pos, &mut s.neg);
            s.sides = Sides::Negative;
            Ok(s)
        }
        Sides::Both => {
            if is_isotropic_binary(f)? {
                isotropic_binary_set(f, limit)
            } else if f.n() >= 4 || allow_proxy {
                local_proxy_set(f, limit)
            } else if f.n() == 3 {
                Err(indefinite_ternary_refusal())
            } else {
                Err(Error::Domain("no exact enumeration method for indefinite anisotropic binary forms".into()))
            }
        }
    }
}

fn indefinite_ternary_refusal() -> Error {
    Error::Domain(
        "exceptions of an indefinite ternary lie in finitely many square classes; exact enumeration unsupported"
            .into(),
    )
}

pub fn empirical_density(f: &QuadraticForm, limit: u64) -> Result<BigRational> {
    Ok(represented_set(f, limit, false)?.empirical_density())
}

/// E_f(X): locally represented integers in `[-X, X]` that f does not represent.
pub fn exceptional_set(f: &QuadraticForm, limit: u64) -> Result<ExceptionSet> {
    let sides = sides_of(f);
    if sides == Sides::Both && f.n() >= 4 {
        return Ok(ExceptionSet { limit, members: vec![] });
    }
    if sides == Sides::Both && f.n() == 3 {
        return Err(indefinite_ternary_refusal());
    }
    let set = represented_set(f, limit, false)?;
    let lm = LocalMembership::new(f)?;
    let spf = if f.n() == 2 { Some(smallest_prime_factors(limit as usize + 1)) } else { None };
    let spf = spf.as_deref();
    let lim = limit as i64;
    let mut members: Vec<i64> = (1..=lim)
        .into_par_iter()
        .flat_map_iter(|m| [-m, m])
        .filter(|&m| !set.contains(m) && lm.contains_i64(m, spf))
        .collect();
    members.sort_unstable();
    Ok(ExceptionSet { limit, members })
}

const MAGIC: &[u8; 4] = b"QFD1";

/// Writes the bitmap file format: magic `QFD1`, X as u64 little-endian, then
/// 2X bits (LSB first) for -X..=-1 followed by 1..=X.
pub fn write_bitmap<W: Write>(mut w: W, limit: u64, contains: impl Fn(i64) -> bool) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&limit.to_le_bytes())?;
    let total = 2 * limit as usize;
    let mut bytes = vec![0u8; total.div_ceil(8)];
    let lim = limit as i64;
    for i in 0..total {
        let m = if (i as i64) < lim { -lim + i as i64 } else { i as i64 - lim + 1 };
        if contains(m) {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    w.write_all(&bytes)
}

/// Reads a bitmap file; returns `X` and the members in increasing order.
pub fn read_bitmap<R: Read>(mut r: R) -> io::Result<(u64, Vec<i64>)> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let limit = u64::from_le_bytes(head[4..12].try_into().expect("8 bytes"));
    let total = 2 * limit as usize;
    let mut bytes = vec![0u8; total.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    let lim = limit as i64;
    let members = (0..total)
        .filter(|i| bytes[i / 8] >> (i % 8) & 1 == 1)
        .map(|i| if (i as i64) < lim { -lim + i as i64 } else { i as i64 - lim + 1 })
        .collect();
    Ok((limit, members))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::parse_form;
    use num_traits::ToPrimitive;

    fn form(s: &str) -> QuadraticForm {
        parse_form(s).unwrap()
    }

    #[test]
    fn small_sets() {
        let s = represented_set_positive(&form("x^2+y^2"), 10).unwrap();
        assert_eq!(s.members(), vec![1, 2, 4, 5, 8, 9, 10]);
        let s = represented_set_positive(&form("x^2+y^2+z^2+w^2"), 100).unwrap();
        assert_eq!(s.count(), 100);
        let s = represented_set_positive(&form("x^2+y^2+z^2"), 100).unwrap();
        let missing: Vec<i64> = (1..=100).filter(|&m| !s.contains(m)).collect();
        assert_eq!(missing, vec![7, 15, 23, 28, 31, 39, 47, 55, 60, 63, 71, 79, 87, 92, 95]);
    }

    #[test]
    fn divisor_criterion() {
        let f = form("x^2+5*x*y");
        for l in [19i64, 29, 59, 79, 89] {
            assert!(!represents_isotropic_binary(&f, l).unwrap());
        }
        for m in [1i64, 6, 11, 16, -4, 36] {
            let w = isotropic_binary_witness(&f, m).unwrap().unwrap();
            assert_eq!(f.eval(&w), m as i128);
        }
        let h = form("x*y");
        assert!((-20..=20).filter(|&m| m != 0).all(|m| represents_isotropic_binary(&h, m).unwrap()));
        let set = represented_set(&f, 200, false).unwrap();
        for m in -200i64..=200 {
            if m != 0 {
                assert_eq!(set.contains(m), represents_isotropic_binary(&f, m).unwrap(), "m = {m}");
            }
        }
    }

    #[test]
    fn exceptions() {
        let e = exceptional_set(&form("x^2+y^2+7*z^2+7*w^2"), 50).unwrap();
        assert_eq!(e.members, vec![3, 6, 21, 42]);
        let e = exceptional_set(&form("3*x^2+4*y^2+9*z^2"), 200).unwrap();
        assert_eq!(e.members, vec![1, 49, 169]);
        assert!(exceptional_set(&form("x^2+y^2+z^2+w^2"), 300).unwrap().members.is_empty());
        assert!(exceptional_set(&form("x^2+y^2-z^2-w^2"), 300).unwrap().members.is_empty());
        assert!(matches!(exceptional_set(&form("x^2+y^2-3*z^2"), 10), Err(Error::Domain(_))));
        let neg = exceptional_set(&form("-x^2-y^2-7*z^2-7*w^2"), 50).unwrap();
        assert_eq!(neg.members, vec![-42, -21, -6, -3]);
    }

    #[test]
    fn bitmap_round_trip() {
        let s = represented_set(&form("x^2-y^2"), 40, false).unwrap();
        let mut buf = Vec::new();
        write_bitmap(&mut buf, s.limit, |m| s.contains(m)).unwrap();
        assert_eq!(&buf[..4], b"QFD1");
        assert_eq!(buf.len(), 12 + 10);
        let (x, members) = read_bitmap(&buf[..]).unwrap();
        assert_eq!(x, 40);
        assert_eq!(members, s.members());
        assert!(read_bitmap(&b"QFD0\0\0\0\0\0\0\0\0"[..]).is_err());
    }

    #[test]
    fn densities() {
        let d = empirical_density(&form("x^2-y^2"), 4000).unwrap();
        assert!((d.to_f64().unwrap() - 0.75).abs() < 0.01);
        let d = empirical_density(&form("2*x^2+2*y^2+2*z^2+2*w^2"), 1000).unwrap();
        assert_eq!(d, BigRational::new(1.into(), 2.into()));
    }
}

//! Global densities as products of local densities, the locally-represented
//! residue sieve, and theorem-level consistency checks.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::ser::{SerializeMap, SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{
    bad_primes, binary_delta, is_isotropic_local, is_isotropic_over_q, is_perfect_square, is_primitive, signature,
    QuadraticForm,
};
use crate::local::{representation_table, RepresentationTable};
use crate::numtheory::{
    factorize, fmt_rational, int_rat, legendre_u64, pow_rat, rat, rational_valuation, vp_u64, Place,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    UnaryZero,
    AnisotropicBinaryZero,
    Product,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::UnaryZero => "unary-zero",
            CaseTag::AnisotropicBinaryZero => "anisotropic-binary-zero",
            CaseTag::Product => "product",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDensityReport {
    pub density: BigRational,
    /// Local factors different from 1, keyed by prime.
    pub factors: BTreeMap<u64, BigRational>,
    pub case: CaseTag,
}

struct RationalMap<'a>(&'a BTreeMap<u64, BigRational>);

impl Serialize for RationalMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (p, v) in self.0 {
            m.serialize_entry(&p.to_string(), &fmt_rational(v))?;
        }
        m.end()
    }
}

impl Serialize for GlobalDensityReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GlobalDensityReport", 3)?;
        st.serialize_field("density", &fmt_rational(&self.density))?;
        st.serialize_field("factors", &RationalMap(&self.factors))?;
        st.serialize_field("case", self.case.as_str())?;
        st.end()
    }
}

impl fmt::Display for GlobalDensityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "density  {}", fmt_rational(&self.density))?;
        writeln!(f, "case     {}", self.case.as_str())?;
        for (p, d) in &self.factors {
            writeln!(f, "  δ_{p:<6} {}", fmt_rational(d))?;
        }
        Ok(())
    }
}

fn is_anisotropic_binary(f: &QuadraticForm) -> Result<bool> {
    Ok(f.n() == 2 && !is_perfect_square(binary_delta(f)?))
}

/// Primes outside of which `f` is Z_p-universal: 2 and the odd divisors of det(2A).
pub fn support_primes(f: &QuadraticForm) -> Result<Vec<u64>> {
    if f.n() == 1 {
        return Err(Error::NoFiniteSupport("unary forms are universal at no prime"));
    }
    if is_anisotropic_binary(f)? {
        return Err(Error::NoFiniteSupport("anisotropic binary forms miss classes at infinitely many primes"));
    }
    bad_primes(f)
}

fn tables(f: &QuadraticForm, primes: &[u64]) -> Result<Vec<RepresentationTable>> {
    primes.par_iter().map(|&p| representation_table(f, p)).collect()
}

pub fn density(f: &QuadraticForm) -> Result<GlobalDensityReport> {
    if f.n() == 1 {
        return Ok(GlobalDensityReport { density: BigRational::zero(), factors: BTreeMap::new(), case: CaseTag::UnaryZero });
    }
    if is_anisotropic_binary(f)? {
        return Ok(GlobalDensityReport {
            density: BigRational::zero(),
            factors: BTreeMap::new(),
            case: CaseTag::AnisotropicBinaryZero,
        });
    }
    let primes = support_primes(f)?;
    let mut density = BigRational::one();
    let mut factors = BTreeMap::new();
    for t in tables(f, &primes)? {
        let d = t.density();
        density *= &d;
        if !d.is_one() {
            factors.insert(t.p, d);
        }
    }
    Ok(GlobalDensityReport { density, factors, case: CaseTag::Product })
}

/// δ₂ of a primitive isotropic binary form with `a = v₂(Δ)/2`.
pub fn dyadic_isotropic_binary_density(a: u32) -> BigRational {
    match a {
        0 => BigRational::one(),
        1 => rat(3, 4),
        _ => {
            let a = i64::from(a);
            let s = int_rat(2) + pow_rat(2, 4 - 2 * a) + pow_rat(2, 5 - 2 * a) + pow_rat(2, 2 - 2 * a);
            s / int_rat(12)
        }
    }
}

/// δ_p at an odd prime of a primitive isotropic binary form with `a = v_p(Δ)`.
pub fn odd_isotropic_binary_density(p: u64, a: u32) -> BigRational {
    let a = i64::from(a);
    let num = int_rat(p) + pow_rat(p, 1 - a) + int_rat(2) * pow_rat(p, -a);
    num / int_rat(2 * p + 2)
}

/// Closed-form density of a primitive isotropic binary form from the
/// factorization of its discriminant.
pub fn density_isotropic_binary_closed_form(f: &QuadraticForm) -> Result<BigRational> {
    if f.n() != 2 {
        return Err(Error::Arity(format!("expected a binary form, got n = {}", f.n())));
    }
    let delta = binary_delta(f)?;
    if !is_perfect_square(delta) {
        return Err(Error::Domain("form is anisotropic".into()));
    }
    if !is_primitive(f) {
        return Err(Error::Domain("form is not primitive".into()));
    }
    let mut out = BigRational::one();
    for (p, e) in factorize(&BigInt::from(delta))? {
        out *= if p == 2 { dyadic_isotropic_binary_density(e / 2) } else { odd_isotropic_binary_density(p, e) };
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SignRule {
    Positive,
    Negative,
    Any,
}

#[derive(Debug, Clone)]
enum Kind {
    /// Universal off the table primes.
    Finite,
    /// Anisotropic binary: off the table primes, `m` is represented at p
    /// iff `v_p(m)` is even or Δ is a square mod p.
    Binary { delta: i64 },
    Unary { c: i64 },
}

/// Decides membership in D_{f,loc}: represented over R and every Z_p.
#[derive(Debug, Clone)]
pub struct LocalMembership {
    sign: SignRule,
    tables: Vec<RepresentationTable>,
    kind: Kind,
}

fn class_index_i64(p: u64, m: i64) -> (u32, usize) {
    let mut u = m.unsigned_abs();
    let v = vp_u64(u, p);
    u /= p.pow(v);
    let half = if p == 2 { 4 } else { 2 };
    let base = if v % 2 == 1 { half } else { 0 };
    let idx = if p == 2 {
        let r = if m < 0 { (8 - u % 8) % 8 } else { u % 8 };
        ((r - 1) / 2) as usize
    } else {
        let r = if m < 0 { (p - u % p) % p } else { u % p };
        usize::from(legendre_u64(r, p) == -1)
    };
    (v, base + idx)
}

fn table_contains_i64(t: &RepresentationTable, m: i64) -> bool {
    let (v, s) = class_index_i64(t.p, m);
    t.entries[s].map_or(false, |e| v >= e)
}

impl LocalMembership {
    pub fn new(f: &QuadraticForm) -> Result<Self> {
        let sig = signature(f);
        let sign = if sig.is_positive_definite() {
            SignRule::Positive
        } else if sig.is_negative_definite() {
            SignRule::Negative
        } else {
            SignRule::Any
        };
        let (kind, primes) = if f.n() == 1 {
            (Kind::Unary { c: f.c(0, 0) }, vec![])
        } else if is_anisotropic_binary(f)? {
            (Kind::Binary { delta: binary_delta(f)? }, bad_primes(f)?)
        } else {
            (Kind::Finite, support_primes(f)?)
        };
        Ok(Self { sign, tables: tables(f, &primes)?, kind })
    }

    pub fn tables(&self) -> &[RepresentationTable] {
        &self.tables
    }

    fn sign_ok(&self, negative: bool) -> bool {
        match self.sign {
            SignRule::Positive => !negative,
            SignRule::Negative => negative,
            SignRule::Any => true,
        }
    }

    /// Membership for a machine integer. `spf` is an optional smallest-prime-
    /// factor table covering `|m|`, used only for anisotropic binaries.
    pub fn contains_i64(&self, m: i64, spf: Option<&[u32]>) -> bool {
        if m == 0 || !self.sign_ok(m < 0) {
            return false;
        }
        match self.kind {
            Kind::Unary { c } => m % c == 0 && is_perfect_square(m / c),
            Kind::Finite => self.tables.iter().all(|t| table_contains_i64(t, m)),
            Kind::Binary { delta } => {
                if !self.tables.iter().all(|t| table_contains_i64(t, m)) {
                    return false;
                }
                let mut u = m.unsigned_abs();
                let next_prime = |u: u64| -> u64 {
                    match spf {
                        Some(s) if (u as usize) < s.len() => u64::from(s[u as usize]),
                        _ => smallest_factor(u),
                    }
                };
                while u > 1 {
                    let p = next_prime(u);
                    let mut e = 0;
                    while u % p == 0 {
                        u /= p;
                        e += 1;
                    }
                    if e % 2 == 1 && self.tables.iter().all(|t| t.p != p) {
                        let d = delta.rem_euclid(p as i64) as u64;
                        if legendre_u64(d, p) != 1 {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    pub fn contains(&self, m: &BigInt) -> Result<bool> {
        if m.is_zero() {
            return Err(Error::Zero("m"));
        }
        if let Some(x) = m.to_i64() {
            return Ok(self.contains_i64(x, None));
        }
        if !self.sign_ok(m.is_negative()) {
            return Ok(false);
        }
        match self.kind {
            Kind::Unary { c } => {
                let c = BigInt::from(c);
                if !m.is_multiple_of(&c) {
                    return Ok(false);
                }
                let q = m / &c;
                Ok(!q.is_negative() && q.sqrt().pow(2) == q)
            }
            Kind::Finite => {
                for t in &self.tables {
                    if !t.contains(m)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Kind::Binary { delta } => {
                for t in &self.tables {
                    if !t.contains(m)? {
                        return Ok(false);
                    }
                }
                for (p, e) in factorize(m)? {
                    if e % 2 == 1 && self.tables.iter().all(|t| t.p != p) {
                        let d = delta.rem_euclid(p as i64) as u64;
                        if legendre_u64(d, p) != 1 {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
        }
    }
}

fn smallest_factor(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 2;
    }
    n
}

/// Is `m` represented by `f` over R and over every Z_p?
pub fn locally_represented(f: &QuadraticForm, m: &BigInt) -> Result<bool> {
    LocalMembership::new(f)?.contains(m)
}

const CLASS_LIST_LIMIT: u64 = 100_000_000;

/// Residues mod M = Π_{p ∈ S} p^{K+2} that are locally represented with
/// valuation below K at every p ∈ S.
#[derive(Debug, Clone)]
pub struct ResidueSieve {
    pub modulus: BigInt,
    pub cutoff: u32,
    per_prime: Vec<(u64, u64, HashSet<u64>)>,
    classes: Option<Vec<u64>>,
}

impl ResidueSieve {
    pub fn class_count(&self) -> BigInt {
        self.per_prime.iter().map(|(_, _, s)| BigInt::from(s.len())).product()
    }

    pub fn density(&self) -> BigRational {
        BigRational::new(self.class_count(), self.modulus.clone())
    }

    /// Sorted residues, available when the modulus is at most 10^8.
    pub fn classes(&self) -> Option<&[u64]> {
        self.classes.as_deref()
    }

    pub fn contains(&self, n: &BigInt) -> bool {
        self.per_prime.iter().all(|(_, q, set)| {
            let r = n.mod_floor(&BigInt::from(*q)).to_u64().expect("residue fits");
            set.contains(&r)
        })
    }
}

pub fn residue_sieve(f: &QuadraticForm, k: u32) -> Result<ResidueSieve> {
    let primes = support_primes(f)?;
    let mut per_prime = Vec::new();
    for t in tables(f, &primes)? {
        let q = t
            .p
            .checked_pow(k + 2)
            .filter(|&q| q <= CLASS_LIST_LIMIT)
            .ok_or_else(|| Error::Domain(format!("modulus {}^{} is too large", t.p, k + 2)))?;
        let set: HashSet<u64> = (1..q)
            .filter(|&a| vp_u64(a, t.p) < k && table_contains_i64(&t, a as i64))
            .collect();
        per_prime.push((t.p, q, set));
    }
    let modulus: BigInt = per_prime.iter().map(|(_, q, _)| BigInt::from(*q)).product();
    let classes = match modulus.to_u64() {
        Some(m) if m <= CLASS_LIST_LIMIT => {
            let mut acc: Vec<(u64, u64)> = vec![(0, 1)];
            for (_, q, set) in &per_prime {
                let mut next = Vec::with_capacity(acc.len() * set.len());
                for &(r, m) in &acc {
                    for &a in set {
                        next.push((crt_pair(r, m, a, *q), m * q));
                    }
                }
                acc = next;
            }
            let mut v: Vec<u64> = acc.into_iter().map(|(r, _)| r).collect();
            v.sort_unstable();
            Some(v)
        }
        _ => None,
    };
    Ok(ResidueSieve { modulus, cutoff: k, per_prime, classes })
}

fn crt_pair(r1: u64, m1: u64, r2: u64, m2: u64) -> u64 {
    // x = r1 + m1 * t with m1 t ≡ r2 - r1 (mod m2)
    let e = (m1 as i128).extended_gcd(&(m2 as i128));
    let inv = e.x.rem_euclid(m2 as i128);
    let t = ((r2 as i128 - r1 as i128).rem_euclid(m2 as i128) * inv).rem_euclid(m2 as i128);
    (r1 as i128 + m1 as i128 * t) as u64
}

/// Π_{p ∈ S} δ_{p,K}(f).
pub fn delta_loc_truncated(f: &QuadraticForm, k: u32) -> Result<BigRational> {
    let primes = support_primes(f)?;
    Ok(tables(f, &primes)?.iter().map(|t| t.truncated_density(k)).product())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremCheck {
    pub name: &'static str,
    pub applies: bool,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremReport {
    pub density: GlobalDensityReport,
    pub checks: Vec<TheoremCheck>,
}

impl TheoremReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| !c.applies || c.holds)
    }
}

impl Serialize for TheoremReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TheoremReport", 2)?;
        st.serialize_field("density", &self.density)?;
        st.serialize_field("checks", &self.checks)?;
        st.end()
    }
}

/// Places (real and finite) where `f` is anisotropic, for n ≥ 2.
pub fn anisotropic_places(f: &QuadraticForm) -> Result<Vec<Place>> {
    let mut out = Vec::new();
    if !is_isotropic_local(f, Place::Real)? {
        out.push(Place::Real);
    }
    for p in bad_primes(f)? {
        if !is_isotropic_local(f, Place::Finite(p))? {
            out.push(Place::Finite(p));
        }
    }
    Ok(out)
}

pub fn theorem_checks(f: &QuadraticForm) -> Result<TheoremReport> {
    let report = density(f)?;
    let d = report.density.clone();
    let n = f.n();
    let mut checks = Vec::new();

    checks.push(TheoremCheck {
        name: "positive density for n >= 3",
        applies: n >= 3,
        holds: d.is_positive(),
        detail: format!("δ = {}", fmt_rational(&d)),
    });

    let isotropic = n >= 2 && is_isotropic_over_q(f)?;
    checks.push(TheoremCheck {
        name: "density below 1 for anisotropic ternaries",
        applies: n == 3 && !isotropic,
        holds: d < BigRational::one(),
        detail: format!("δ = {}", fmt_rational(&d)),
    });

    if n >= 3 {
        let ts = tables(f, &support_primes(f)?)?;
        let universal = ts.iter().all(|t| t.is_universal());
        let adc = ts.iter().all(|t| t.is_adc());
        let one = d.is_one();
        checks.push(TheoremCheck {
            name: "locally universal <=> locally ADC <=> density 1",
            applies: n >= 4 || isotropic,
            holds: universal == adc && adc == one,
            detail: format!("universal = {universal}, ADC = {adc}, δ = 1: {one}"),
        });

        let positive_ternary = n == 3 && signature(f).is_positive_definite();
        let mut hyp = positive_ternary;
        if hyp {
            for t in &ts {
                let p = t.p;
                let relevant = p == 2 || (p % 4 == 3 && is_isotropic_local(f, Place::Finite(p))?);
                if relevant && !t.is_adc() {
                    hyp = false;
                }
            }
        }
        let v2 = if d.is_zero() { None } else { Some(rational_valuation(&d, 2)?) };
        checks.push(TheoremCheck {
            name: "negative 2-adic valuation of the density",
            applies: hyp,
            holds: v2.map_or(false, |v| v < 0),
            detail: match v2 {
                Some(v) => format!("v2(δ) = {v}"),
                None => "δ = 0".into(),
            },
        });
    }

    if n == 3 {
        let places = anisotropic_places(f)?;
        let names: Vec<String> = places.iter().map(|p| p.to_string()).collect();
        checks.push(TheoremCheck {
            name: "even number of anisotropic places",
            applies: true,
            holds: places.len() % 2 == 0,
            detail: format!("anisotropic at {{{}}}", names.join(", ")),
        });
    }

    checks.push(TheoremCheck {
        name: "density is rational",
        applies: true,
        holds: true,
        detail: fmt_rational(&d),
    });
    Ok(TheoremReport { density: report, checks })
}

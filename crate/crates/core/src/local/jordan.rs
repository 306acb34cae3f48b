//! Jordan splitting over Z_(p) and a Z_p-representability test built on it.
//!
//! Representability is decided by walking a chain of rescaled splittings:
//! at each step either the lowest Jordan level carries a primitive solution
//! (decided by a residue test mod p, or mod 8 when p = 2), or those variables
//! are all divisible by p and the level moves up by two. The chain is
//! eventually periodic in its normalized level vector, so it is built once
//! per form and reused for every target.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::forms::{add_sym, QuadraticForm};
use crate::numtheory::{is_prime, legendre_u64, pow_rat, rational_mod, rational_valuation, small_mod, valuation};

/// One orthogonal summand of a Jordan splitting, written in f-coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JordanComponent {
    /// `p^level * unit * x^2`; `unit` is reduced mod p (mod 8 for p = 2).
    Unary { level: i64, unit: u64 },
    /// `2^level * x*y`.
    Hyperbolic { level: i64 },
    /// `2^level * (x^2 + x*y + y^2)`.
    Anisotropic { level: i64 },
}

impl JordanComponent {
    pub fn level(&self) -> i64 {
        match *self {
            JordanComponent::Unary { level, .. }
            | JordanComponent::Hyperbolic { level }
            | JordanComponent::Anisotropic { level } => level,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            JordanComponent::Unary { .. } => 1,
            _ => 2,
        }
    }

    fn with_level(self, level: i64) -> Self {
        match self {
            JordanComponent::Unary { unit, .. } => JordanComponent::Unary { level, unit },
            JordanComponent::Hyperbolic { .. } => JordanComponent::Hyperbolic { level },
            JordanComponent::Anisotropic { .. } => JordanComponent::Anisotropic { level },
        }
    }
}

fn unit_residue(x: &BigRational, p: u64, level: i64) -> Result<u64> {
    let modulus = if p == 2 { 8u64 } else { p };
    let u = x / pow_rat(p, level);
    let r = rational_mod(&u, &BigInt::from(modulus))
        .ok_or_else(|| Error::Internal("non-integral Jordan unit".into()))?;
    Ok(r.to_u64().expect("small residue"))
}

/// Jordan splitting of `f` over Z_(p), pivoting on an entry of minimal
/// valuation (diagonal first, smallest index on ties). Components come out in
/// pivot order.
pub fn jordan_decomposition(f: &QuadraticForm, p: u64) -> Result<Vec<JordanComponent>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let mut m: Vec<Vec<BigRational>> = f
        .doubled_gram()
        .into_iter()
        .map(|row| row.into_iter().map(|x| BigRational::from_integer(x.into())).collect())
        .collect();
    let val = |x: &BigRational| rational_valuation(x, p).expect("nonzero entry");
    let mut active: Vec<usize> = (0..f.n()).collect();
    let mut out = Vec::with_capacity(f.n());

    while !active.is_empty() {
        let mut min_v: Option<i64> = None;
        for &i in &active {
            for &j in &active {
                if !m[i][j].is_zero() {
                    let v = val(&m[i][j]);
                    min_v = Some(min_v.map_or(v, |b: i64| b.min(v)));
                }
            }
        }
        let mv = min_v.ok_or(Error::Degenerate)?;
        let diag = active.iter().copied().find(|&i| !m[i][i].is_zero() && val(&m[i][i]) == mv);
        let pivot = match diag {
            Some(i) => Some(i),
            None => {
                let (i, j) = active
                    .iter()
                    .flat_map(|&i| active.iter().map(move |&j| (i, j)))
                    .find(|&(i, j)| i < j && !m[i][j].is_zero() && val(&m[i][j]) == mv)
                    .expect("minimal entry is off-diagonal");
                if p != 2 {
                    add_sym(&mut m, i, j, &BigRational::one());
                    Some(i)
                } else {
                    // 2x2 block on (i, j).
                    let (a, b, c) = (m[i][i].clone(), m[i][j].clone(), m[j][j].clone());
                    let det = &a * &c - &b * &b;
                    for &k in &active {
                        if k == i || k == j {
                            continue;
                        }
                        let (x, y) = (m[k][i].clone(), m[k][j].clone());
                        let alpha = (&c * &x - &b * &y) / &det;
                        let beta = (&a * &y - &b * &x) / &det;
                        add_sym(&mut m, k, i, &-alpha);
                        add_sym(&mut m, k, j, &-beta);
                    }
                    let level = mv;
                    let scale = pow_rat(2, level);
                    let half = BigRational::new(1.into(), 2.into());
                    let a1 = &a * &half / &scale;
                    let c1 = &c * &half / &scale;
                    let odd = |x: &BigRational| !x.is_zero() && val(x) == 0;
                    out.push(if odd(&a1) && odd(&c1) {
                        JordanComponent::Anisotropic { level }
                    } else {
                        JordanComponent::Hyperbolic { level }
                    });
                    active.retain(|&t| t != i && t != j);
                    None
                }
            }
        };
        if let Some(i) = pivot {
            let piv = m[i][i].clone();
            for &k in &active {
                if k != i {
                    let c = -(&m[k][i] / &piv);
                    add_sym(&mut m, k, i, &c);
                }
            }
            let coef = piv / BigRational::from_integer(2.into());
            let level = val(&coef);
            out.push(JordanComponent::Unary { level, unit: unit_residue(&coef, p, level)? });
            active.retain(|&t| t != i);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum LevelZeroTest {
    /// Units of the level-0 unary components (odd p).
    Odd { units: Vec<u64> },
    /// Bit r set iff r mod 8 is reached with a primitive level-0 vector.
    Dyadic { mask: u8 },
}

#[derive(Debug, Clone)]
struct ChainState {
    shift: i64,
    test: LevelZeroTest,
}

/// A form over Z_p prepared for repeated representability queries.
#[derive(Debug, Clone)]
pub struct LocalForm {
    p: u64,
    components: Vec<JordanComponent>,
    states: Vec<ChainState>,
    cycle_start: usize,
    cycle_shift: i64,
}

fn dyadic_values(c: &JordanComponent) -> Vec<(u8, bool)> {
    let lvl = c.level();
    if lvl >= 3 {
        return vec![(0, false)];
    }
    let scale = 1u64 << lvl;
    let mut out = Vec::new();
    match *c {
        JordanComponent::Unary { unit, .. } => {
            for x in 0..8u64 {
                out.push((((scale * unit * x * x) % 8) as u8, x % 2 == 1));
            }
        }
        JordanComponent::Hyperbolic { .. } | JordanComponent::Anisotropic { .. } => {
            let aniso = matches!(c, JordanComponent::Anisotropic { .. });
            for x in 0..8u64 {
                for y in 0..8u64 {
                    let q = if aniso { x * x + x * y + y * y } else { x * y };
                    out.push((((scale * q) % 8) as u8, x % 2 == 1 || y % 2 == 1));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn build_test(p: u64, comps: &[JordanComponent], levels: &[i64]) -> LevelZeroTest {
    if p != 2 {
        let units = comps
            .iter()
            .zip(levels)
            .filter(|(_, &l)| l == 0)
            .map(|(c, _)| match c {
                JordanComponent::Unary { unit, .. } => *unit,
                _ => unreachable!("binary blocks only occur at p = 2"),
            })
            .collect();
        return LevelZeroTest::Odd { units };
    }
    // (residue, primitive-at-level-0) reachable pairs.
    let mut reach = [[false; 2]; 8];
    reach[0][0] = true;
    for (c, &l) in comps.iter().zip(levels) {
        let vals = dyadic_values(&c.with_level(l));
        let mut next = [[false; 2]; 8];
        for r in 0..8usize {
            for prim in 0..2usize {
                if !reach[r][prim] {
                    continue;
                }
                for &(v, pr) in &vals {
                    let np = prim == 1 || (l == 0 && pr);
                    next[(r + v as usize) % 8][usize::from(np)] = true;
                }
            }
        }
        reach = next;
    }
    let mut mask = 0u8;
    for (r, row) in reach.iter().enumerate() {
        if row[1] {
            mask |= 1 << r;
        }
    }
    LevelZeroTest::Dyadic { mask }
}

impl LocalForm {
    pub fn new(f: &QuadraticForm, p: u64) -> Result<Self> {
        let components = jordan_decomposition(f, p)?;
        Ok(Self::from_components(p, components))
    }

    pub fn from_components(p: u64, components: Vec<JordanComponent>) -> Self {
        let mut levels: Vec<i64> = components.iter().map(|c| c.level()).collect();
        let mut shift = 0i64;
        let mut states: Vec<ChainState> = Vec::new();
        let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
        loop {
            let m = *levels.iter().min().expect("nonempty form");
            shift += m;
            levels.iter_mut().for_each(|l| *l -= m);
            if let Some(&start) = seen.get(&levels) {
                let cycle_shift = shift - states[start].shift;
                return Self { p, components, states, cycle_start: start, cycle_shift };
            }
            seen.insert(levels.clone(), states.len());
            states.push(ChainState { shift, test: build_test(p, &components, &levels) });
            levels.iter_mut().filter(|l| **l == 0).for_each(|l| *l = 2);
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn components(&self) -> &[JordanComponent] {
        &self.components
    }

    fn state(&self, k: usize) -> (i64, &LevelZeroTest) {
        if k < self.states.len() {
            let s = &self.states[k];
            return (s.shift, &s.test);
        }
        let period = self.states.len() - self.cycle_start;
        let off = k - self.cycle_start;
        let s = &self.states[self.cycle_start + off % period];
        (s.shift + (off / period) as i64 * self.cycle_shift, &s.test)
    }

    /// Does the form represent `p^v * unit` over Z_p?
    pub fn represents_pv(&self, v: u32, unit: &BigInt) -> bool {
        let p = self.p;
        let v = i64::from(v);
        for k in 0.. {
            let (shift, test) = self.state(k);
            if shift > v {
                return false;
            }
            let w = v - shift;
            let ok = match test {
                LevelZeroTest::Odd { units } => {
                    let d = units.len();
                    if w == 0 {
                        d >= 2 || (d == 1 && legendre_u64(small_mod(unit, p) * units[0] % p, p) == 1)
                    } else {
                        d >= 3 || (d == 2 && legendre_u64((p - units[0]) * units[1] % p, p) == 1)
                    }
                }
                LevelZeroTest::Dyadic { mask } => {
                    let r = if w >= 3 { 0 } else { (small_mod(unit, 8) << w) % 8 };
                    mask & (1 << r) != 0
                }
            };
            if ok {
                return true;
            }
        }
        unreachable!()
    }

    pub fn represents(&self, t: &BigInt) -> Result<bool> {
        let pv = valuation(t, self.p).map_err(|_| Error::Zero("target t"))?;
        Ok(self.represents_pv(pv.v, &pv.unit))
    }
}

/// Is `t` (nonzero) represented by `f` over Z_p?
pub fn zp_represents(f: &QuadraticForm, p: u64, t: &BigInt) -> Result<bool> {
    if t.is_zero() {
        return Err(Error::Zero("target t"));
    }
    LocalForm::new(f, p)?.represents(t)
}

/// Valuations of the Jordan components with their units, for odd p: the
/// diagonal `p^level * unit` coefficients.
pub(crate) fn odd_diagonal(f: &QuadraticForm, p: u64) -> Result<Vec<(i64, u64)>> {
    debug_assert!(p.is_odd());
    jordan_decomposition(f, p)?
        .into_iter()
        .map(|c| match c {
            JordanComponent::Unary { level, unit } => Ok((level, unit)),
            _ => Err(Error::Internal("binary Jordan block at odd p".into())),
        })
        .collect()
}

//! Integral quadratic forms: storage, rational invariants, isotropy.

mod binary;
mod parse;

pub use binary::{gauss_reduce_isotropic_binary, transform_binary, ReducedIsotropicBinary};
pub use parse::parse_form;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numtheory::{
    hilbert_symbol, int_rat, is_local_square, is_prime, prime_divisors, Place,
};

/// `f = Σ_{i ≤ j} c_ij t_i t_j`, coefficients stored row-major over the upper triangle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadraticForm {
    n: usize,
    coeffs: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub r: usize,
    pub s: usize,
}

impl Signature {
    pub fn is_positive_definite(&self) -> bool {
        self.s == 0
    }
    pub fn is_negative_definite(&self) -> bool {
        self.r == 0
    }
    pub fn is_indefinite(&self) -> bool {
        self.r > 0 && self.s > 0
    }
}

fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

impl QuadraticForm {
    pub fn new(n: usize, coeffs: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Arity("a form needs at least one variable".into()));
        }
        if coeffs.len() != n * (n + 1) / 2 {
            return Err(Error::Arity(format!(
                "{} coefficients given, {} expected for n = {n}",
                coeffs.len(),
                n * (n + 1) / 2
            )));
        }
        let f = Self { n, coeffs };
        if f.det_doubled_gram().is_zero() {
            return Err(Error::Degenerate);
        }
        Ok(f)
    }

    /// Diagonal form `Σ d_i t_i^2`.
    pub fn diagonal(d: &[i64]) -> Result<Self> {
        let n = d.len();
        let mut c = vec![0; n * (n + 1) / 2];
        for (i, &di) in d.iter().enumerate() {
            c[tri_index(n, i, i)] = di;
        }
        Self::new(n, c)
    }

    /// Build from a full integer matrix of cross coefficients: entry `(i, j)`, `i ≤ j`.
    pub fn from_upper(n: usize, get: impl Fn(usize, usize) -> i64) -> Result<Self> {
        let mut c = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                c.push(get(i, j));
            }
        }
        Self::new(n, c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Coefficient of `t_i t_j` (symmetric in i, j; 0-based).
    pub fn c(&self, i: usize, j: usize) -> i64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.coeffs[tri_index(self.n, i, j)]
    }

    /// Integer matrix `2A`.
    pub fn doubled_gram(&self) -> Vec<Vec<i64>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| if i == j { 2 * self.c(i, i) } else { self.c(i, j) })
                    .collect()
            })
            .collect()
    }

    /// Rational Gram matrix `A`.
    pub fn gram(&self) -> Vec<Vec<BigRational>> {
        let two = int_rat(2);
        self.doubled_gram()
            .into_iter()
            .map(|row| row.into_iter().map(|x| int_rat(x) / &two).collect())
            .collect()
    }

    pub fn eval(&self, x: &[i64]) -> i128 {
        assert_eq!(x.len(), self.n);
        let mut s: i128 = 0;
        for i in 0..self.n {
            for j in i..self.n {
                s += self.c(i, j) as i128 * x[i] as i128 * x[j] as i128;
            }
        }
        s
    }

    pub fn eval_big(&self, x: &[BigInt]) -> BigInt {
        let mut s = BigInt::zero();
        for i in 0..self.n {
            for j in i..self.n {
                s += BigInt::from(self.c(i, j)) * &x[i] * &x[j];
            }
        }
        s
    }

    /// `det(2A)` by fraction-free elimination.
    pub fn det_doubled_gram(&self) -> BigInt {
        let m: Vec<Vec<BigInt>> = self
            .doubled_gram()
            .into_iter()
            .map(|r| r.into_iter().map(BigInt::from).collect())
            .collect();
        bareiss_det(m)
    }

    pub fn content(&self) -> i64 {
        self.coeffs.iter().fold(0i64, |g, &c| g.gcd(&c))
    }

    pub fn scaled(&self, k: i64) -> Result<Self> {
        Self::new(self.n, self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn negated(&self) -> Self {
        Self { n: self.n, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    /// `g(y) = f(M y)` for an integer matrix `M` (columns are images of basis vectors).
    pub fn transform(&self, m: &[Vec<i64>]) -> Result<Self> {
        let n = self.n;
        let g = self.doubled_gram();
        // 2A' = M^T (2A) M
        let mut out = vec![vec![0i64; n]; n];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, slot) in row.iter_mut().enumerate() {
                let mut s = 0i64;
                for i in 0..n {
                    for j in 0..n {
                        s += m[i][a] * g[i][j] * m[j][b];
                    }
                }
                *slot = s;
            }
        }
        Self::from_upper(n, |i, j| if i == j { out[i][i] / 2 } else { out[i][j] })
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.c(i, j) == 0))
    }
}

fn var_name(n: usize, i: usize) -> String {
    if n <= 4 {
        ["x", "y", "z", "w"][i].to_string()
    } else {
        format!("x{}", i + 1)
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 0..self.n {
            for j in i..self.n {
                let c = self.c(i, j);
                if c == 0 {
                    continue;
                }
                let mono = if i == j {
                    format!("{}^2", var_name(self.n, i))
                } else {
                    format!("{}*{}", var_name(self.n, i), var_name(self.n, j))
                };
                let sign = if c < 0 { "-" } else if first { "" } else { "+" };
                let mag = c.abs();
                let sep = if first { "" } else { " " };
                let gap = if first || sign.is_empty() { "" } else { " " };
                if mag == 1 {
                    write!(out, "{sep}{sign}{gap}{mono}")?;
                } else {
                    write!(out, "{sep}{sign}{gap}{mag}*{mono}")?;
                }
                first = false;
            }
        }
        Ok(())
    }
}

pub(crate) fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

pub fn make_form(n: usize, coeffs: &[i64]) -> Result<QuadraticForm> {
    QuadraticForm::new(n, coeffs.to_vec())
}

/// `det(A)` as an exact rational.
pub fn discriminant(f: &QuadraticForm) -> BigRational {
    BigRational::new(f.det_doubled_gram(), num_traits::pow(BigInt::from(2), f.n()))
}

/// `Δ = c_12^2 − 4 c_11 c_22` for binary forms.
pub fn binary_delta(f: &QuadraticForm) -> Result<i64> {
    if f.n() != 2 {
        return Err(Error::Arity(format!("binary form required, got n = {}", f.n())));
    }
    Ok(f.c(0, 1) * f.c(0, 1) - 4 * f.c(0, 0) * f.c(1, 1))
}

/// Diagonal entries of a congruence diagonalization over Q.
pub fn diagonalize_over_q(f: &QuadraticForm) -> Vec<BigRational> {
    let n = f.n();
    let mut a = f.gram();
    let mut d = Vec::with_capacity(n);
    for k in 0..n {
        if let Some(i) = (k..n).find(|&i| !a[i][i].is_zero()) {
            swap_sym(&mut a, i, k);
        } else {
            let (i, j) = (k..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !a[i][j].is_zero())
                .expect("nondegenerate form has a nonzero coupling");
            // e_i <- e_i + e_j makes the (i, i) entry 2 a_ij.
            add_sym(&mut a, i, j, &BigRational::one());
            swap_sym(&mut a, i, k);
        }
        let piv = a[k][k].clone();
        for j in k + 1..n {
            let factor = &a[j][k] / &piv;
            if !factor.is_zero() {
                add_sym(&mut a, j, k, &-factor);
            }
        }
        d.push(piv);
    }
    d
}

/// Basis change `e_i <- e_i + c e_j` applied to a symmetric matrix.
pub(crate) fn add_sym(a: &mut [Vec<BigRational>], i: usize, j: usize, c: &BigRational) {
    let n = a.len();
    for t in 0..n {
        let v = &a[j][t] * c;
        a[i][t] += v;
    }
    for t in 0..n {
        let v = &a[t][j] * c;
        a[t][i] += v;
    }
}

pub(crate) fn swap_sym<T>(a: &mut [Vec<T>], i: usize, j: usize) {
    if i == j {
        return;
    }
    a.swap(i, j);
    for row in a.iter_mut() {
        row.swap(i, j);
    }
}

pub fn signature(f: &QuadraticForm) -> Signature {
    let d = diagonalize_over_q(f);
    let r = d.iter().filter(|x| x.is_positive()).count();
    Signature { r, s: f.n() - r }
}

pub fn is_primitive(f: &QuadraticForm) -> bool {
    f.content() == 1
}

pub fn primitive_part(f: &QuadraticForm) -> (i64, QuadraticForm) {
    let c = f.content();
    let g = QuadraticForm { n: f.n, coeffs: f.coeffs.iter().map(|x| x / c).collect() };
    (c, g)
}

pub fn hasse_invariant(f: &QuadraticForm, place: Place) -> Result<i8> {
    hasse_of_diagonal(&diagonalize_over_q(f), place)
}

pub(crate) fn hasse_of_diagonal(d: &[BigRational], place: Place) -> Result<i8> {
    let mut e = 1;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            e *= hilbert_symbol(&d[i], &d[j], place)?;
        }
    }
    Ok(e)
}

pub fn witt_invariant(f: &QuadraticForm, place: Place) -> Result<i8> {
    let disc = discriminant(f);
    Ok(hasse_invariant(f, place)? * hilbert_symbol(&int_rat(-1), &-disc, place)?)
}

fn check_place(place: Place) -> Result<()> {
    match place {
        Place::Finite(p) if !is_prime(p) => Err(Error::NotPrime(p)),
        _ => Ok(()),
    }
}

pub fn is_isotropic_local(f: &QuadraticForm, place: Place) -> Result<bool> {
    check_place(place)?;
    let n = f.n();
    if n == 1 {
        return Ok(false);
    }
    if place == Place::Real {
        return Ok(signature(f).is_indefinite());
    }
    let disc = discriminant(f);
    match n {
        2 => is_local_square(&-disc, place),
        3 => Ok(witt_invariant(f, place)? == 1),
        4 => {
            let m1 = int_rat(-1);
            let eps = hasse_invariant(f, place)?;
            let anisotropic =
                is_local_square(&disc, place)? && eps == -hilbert_symbol(&m1, &m1, place)?;
            Ok(!anisotropic)
        }
        _ => Ok(true),
    }
}

/// Finite places where isotropy can fail for `n ≥ 3`: 2 and odd primes dividing `det(2A)`.
pub fn bad_primes(f: &QuadraticForm) -> Result<Vec<u64>> {
    let mut s = prime_divisors(&f.det_doubled_gram())?;
    if !s.contains(&2) {
        s.insert(0, 2);
    }
    Ok(s)
}

pub fn is_isotropic_over_q(f: &QuadraticForm) -> Result<bool> {
    match f.n() {
        1 => Ok(false),
        2 => Ok(is_perfect_square(binary_delta(f)?)),
        _ => {
            if !is_isotropic_local(f, Place::Real)? {
                return Ok(false);
            }
            for p in bad_primes(f)? {
                if !is_isotropic_local(f, Place::Finite(p))? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

pub fn is_perfect_square(x: i64) -> bool {
    x >= 0 && {
        let r = isqrt(x as u128) as i64;
        r * r == x
    }
}

/// Floor of the square root.
pub fn isqrt(x: u128) -> u128 {
    if x < 2 {
        return x;
    }
    let mut r = (x as f64).sqrt() as u128;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::rat;

    fn form(s: &str) -> QuadraticForm {
        parse_form(s).unwrap()
    }

    #[test]
    fn construction() {
        let f = make_form(3, &[1, 0, 0, 1, 0, 1]).unwrap();
        assert_eq!(f, form("x^2+y^2+z^2"));
        assert_eq!(make_form(2, &[1, 5, 0]).unwrap(), form("x^2+5*x*y"));
        assert_eq!(make_form(2, &[1, 0, 0]), Err(Error::Degenerate));
        assert!(matches!(make_form(2, &[1, 0]), Err(Error::Arity(_))));
        assert_eq!(form("x^2+5*x*y").to_string(), "x^2 + 5*x*y");
        assert_eq!(form("-x^2+3*y*z-2*z^2 + y^2").to_string(), "-x^2 + y^2 + 3*y*z - 2*z^2");
    }

    #[test]
    fn discriminants() {
        assert_eq!(discriminant(&form("x^2+y^2+z^2")), int_rat(1));
        assert_eq!(binary_delta(&form("x^2-y^2")).unwrap(), 4);
        assert_eq!(binary_delta(&form("x^2+5*x*y")).unwrap(), 25);
        assert_eq!(discriminant(&form("x^2+5*x*y")), rat(-25, 4));
        assert!(binary_delta(&form("x^2+y^2+z^2")).is_err());
    }

    #[test]
    fn signatures() {
        assert_eq!(signature(&form("x^2+y^2+z^2")), Signature { r: 3, s: 0 });
        assert_eq!(signature(&form("x^2-y^2")), Signature { r: 1, s: 1 });
        assert_eq!(signature(&form("x^2+y^2+7*z^2+7*w^2")), Signature { r: 4, s: 0 });
        assert_eq!(signature(&form("x*y")), Signature { r: 1, s: 1 });
        assert_eq!(signature(&form("x*y+y*z+z*x")), Signature { r: 1, s: 2 });
    }

    #[test]
    fn diagonalization() {
        let d = diagonalize_over_q(&form("2*x^2+3*y^2-z^2"));
        assert_eq!(d, vec![int_rat(2), int_rat(3), int_rat(-1)]);
        let d = diagonalize_over_q(&form("x*y"));
        let prod: BigRational = d.iter().product();
        assert!(is_local_square(&-prod, Place::Real).unwrap());
        let f = form("x^2+5*x*y");
        let d = diagonalize_over_q(&f);
        let prod: BigRational = d.iter().product();
        assert_eq!(prod, discriminant(&f));
    }

    #[test]
    fn primitivity() {
        assert_eq!(primitive_part(&form("x^2+y^2")), (1, form("x^2+y^2")));
        let big = form("2023*x^2+2023*y^2+2023*z^2+2023*w^2");
        assert_eq!(primitive_part(&big), (2023, form("x^2+y^2+z^2+w^2")));
        assert_eq!(primitive_part(&form("2*x^2+2*x*y+2*y^2")), (2, form("x^2+x*y+y^2")));
        assert!(!is_primitive(&big));
    }

    #[test]
    fn invariants() {
        let f = form("x^2+y^2+z^2");
        for p in [3u64, 5, 7] {
            assert_eq!(hasse_invariant(&f, Place::Finite(p)).unwrap(), 1);
        }
        assert_eq!(witt_invariant(&f, Place::Real).unwrap(), -1);
        assert_eq!(witt_invariant(&f, Place::Finite(2)).unwrap(), -1);
    }

    #[test]
    fn isotropy() {
        let h = form("x^2-y^2");
        for v in [Place::Real, Place::Finite(2), Place::Finite(3), Place::Finite(5)] {
            assert!(is_isotropic_local(&h, v).unwrap());
        }
        assert!(is_isotropic_local(&form("x^2+y^2+z^2"), Place::Finite(7)).unwrap());
        assert!(!is_isotropic_local(&form("x^2+y^2+z^2"), Place::Finite(2)).unwrap());
        assert!(!is_isotropic_local(&form("x^2+y^2+7*z^2+7*w^2"), Place::Finite(7)).unwrap());
        assert!(is_isotropic_over_q(&h).unwrap());
        assert!(!is_isotropic_over_q(&form("x^2+y^2")).unwrap());
        assert!(is_isotropic_over_q(&form("x^2+5*x*y")).unwrap());
        assert!(is_isotropic_over_q(&form("x^2+y^2-z^2")).unwrap());
        assert!(!is_isotropic_over_q(&form("x^2+y^2-3*z^2")).unwrap());
    }

    #[test]
    fn transform_invariance() {
        let f = form("x^2+3*x*y-2*y^2+5*z^2-y*z");
        let m = vec![vec![1, 2, 0], vec![0, 1, 0], vec![-1, 3, 1]];
        let g = f.transform(&m).unwrap();
        for x in -3..=3 {
            for y in -3..=3 {
                for z in -3..=3 {
                    let img = [x + 2 * y, y, -x + 3 * y + z];
                    assert_eq!(g.eval(&[x, y, z]), f.eval(&img));
                }
            }
        }
        assert_eq!(g.det_doubled_gram(), f.det_doubled_gram());
    }
}

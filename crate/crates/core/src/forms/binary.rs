//! SL2(Z) reduction of primitive isotropic binary forms to `A x^2 + B x y`.

use num_integer::Integer;

use super::{binary_delta, is_primitive, isqrt, QuadraticForm};
use crate::error::{Error, Result};

/// Reduced shape of a primitive isotropic binary form.
///
/// `witness` is an SL2(Z) matrix `M` (columns are the new basis vectors) with
/// `f(M (X, Y)) = A X^2 + B X Y`; in the hyperbolic case `A = 0, B = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedIsotropicBinary {
    pub a: i64,
    pub b: i64,
    pub hyperbolic: bool,
    pub witness: [[i64; 2]; 2],
}

/// Coefficients `(a, b, c)` of `f(M (X, Y))`.
pub fn transform_binary(coef: (i64, i64, i64), m: &[[i64; 2]; 2]) -> (i64, i64, i64) {
    let (a, b, c) = coef;
    let f = |x: i64, y: i64| a * x * x + b * x * y + c * y * y;
    let polar = |u: (i64, i64), v: (i64, i64)| 2 * a * u.0 * v.0 + b * (u.0 * v.1 + u.1 * v.0) + 2 * c * u.1 * v.1;
    let u = (m[0][0], m[1][0]);
    let v = (m[0][1], m[1][1]);
    (f(u.0, u.1), polar(u, v), f(v.0, v.1))
}

fn primitive_vec(x: i64, y: i64) -> (i64, i64) {
    let g = x.gcd(&y);
    (x / g, y / g)
}

/// Candidate primitive isotropic vectors (one per rational isotropic line).
fn isotropic_lines(a: i64, b: i64, c: i64, root: i64) -> Vec<(i64, i64)> {
    if a == 0 {
        // y (b x + c y) = 0
        return vec![(1, 0), primitive_vec(-c, b)];
    }
    // a x^2 + b x y + c y^2 = 0 with y = 2a: x = -b ± root
    vec![primitive_vec(-b + root, 2 * a), primitive_vec(-b - root, 2 * a)]
}

pub fn gauss_reduce_isotropic_binary(f: &QuadraticForm) -> Result<ReducedIsotropicBinary> {
    let delta = binary_delta(f)?;
    if !super::is_perfect_square(delta) {
        return Err(Error::Domain(format!("binary form with Δ = {delta} is not isotropic")));
    }
    if !is_primitive(f) {
        return Err(Error::Domain("form is not primitive".into()));
    }
    let root = isqrt(delta as u128) as i64;
    let coef = (f.c(0, 0), f.c(0, 1), f.c(1, 1));
    // Each isotropic line gives a candidate; B = sqrt(Δ) is shared, so the
    // lexicographically least (A, B) is the one with least A.
    let mut best: Option<ReducedIsotropicBinary> = None;
    for (x, y) in isotropic_lines(coef.0, coef.1, coef.2, root) {
        // Extend v = (x, y) to a basis (v, w) with det 1.
        let e = x.extended_gcd(&y);
        debug_assert_eq!(e.gcd.abs(), 1);
        let (s, t) = if e.gcd == 1 { (e.x, e.y) } else { (-e.x, -e.y) };
        let w = (-t, s);
        let basis = [[x, w.0], [y, w.1]];
        let (_, coupling, cw) = transform_binary(coef, &basis);
        if coupling >= 0 {
            continue;
        }
        // Columns (-w, v): f = cw X^2 - coupling X Y.
        let b = -coupling;
        let k = -Integer::div_floor(&cw, &b);
        let a = cw + k * b;
        // Shear Y -> Y + k X: first column becomes -w + k v.
        let witness = [[-w.0 + k * x, x], [-w.1 + k * y, y]];
        let out = transform_binary(coef, &witness);
        if out != (a, b, 0) {
            return Err(Error::Internal(format!("reduction check failed: {out:?}")));
        }
        if best.as_ref().map_or(true, |r| (a, b) < (r.a, r.b)) {
            best = Some(ReducedIsotropicBinary { a, b, hyperbolic: b == 1, witness });
        }
    }
    best.ok_or_else(|| Error::Internal("no isotropic line with negative coupling".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::parse_form;

    fn red(s: &str) -> ReducedIsotropicBinary {
        gauss_reduce_isotropic_binary(&parse_form(s).unwrap()).unwrap()
    }

    #[test]
    fn examples() {
        let r = red("x^2+5*x*y");
        assert_eq!((r.a, r.b, r.hyperbolic), (1, 5, false));
        let r = red("3*x^2+7*x*y");
        assert_eq!((r.a, r.b), (3, 7));
        let r = red("x^2-9*y^2");
        assert_eq!(r.b, 6);
        assert!(1 <= r.a && r.a < 6 && r.a.gcd(&6) == 1);
        let r = red("x*y");
        assert!(r.hyperbolic);
        let r = red("x^2-y^2");
        assert_eq!((r.a, r.b), (1, 2));
        assert!(gauss_reduce_isotropic_binary(&parse_form("x^2+y^2").unwrap()).is_err());
        assert!(gauss_reduce_isotropic_binary(&parse_form("2*x^2-2*y^2").unwrap()).is_err());
    }

    #[test]
    fn random_sl2_images_reduce_consistently() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let b: i64 = rng.gen_range(2..60);
            let a: i64 = rng.gen_range(1..b);
            if a.gcd(&b) != 1 {
                continue;
            }
            let (p, q) = (rng.gen_range(-4i64..=4), rng.gen_range(-4i64..=4));
            let m = [[1 + p * q, p], [q, 1]];
            let (c0, c1, c2) = transform_binary((a, b, 0), &m);
            let g = QuadraticForm::new(2, vec![c0, c1, c2]).unwrap();
            let r = gauss_reduce_isotropic_binary(&g).unwrap();
            assert_eq!(r.b, b);
            assert_eq!(r.a, a, "form {g}");
            let det = r.witness[0][0] * r.witness[1][1] - r.witness[0][1] * r.witness[1][0];
            assert_eq!(det, 1);
        }
    }
}

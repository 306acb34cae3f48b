use std::collections::BTreeSet;

use num_rational::BigRational;
use qfd_core::forms::{is_primitive, parse_form, QuadraticForm};
use qfd_core::global::{delta_loc_truncated, density, density_isotropic_binary_closed_form};
use qfd_core::inverse::{attainable_local_density_set, greedy_interval_product};
use qfd_core::local::{is_adc_local, local_density};
use qfd_core::numtheory::{least_nonresidue, rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_matches_product_for_isotropic_binaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut done = 0;
    while done < 100 {
        // (a x + b y)(c x + d y) has Δ = (ad - bc)^2.
        let [a, b, c, d]: [i64; 4] = std::array::from_fn(|_| rng.gen_range(-12..=12));
        let det = a * d - b * c;
        if det == 0 || det * det > 10_000 {
            continue;
        }
        let f = QuadraticForm::new(2, vec![a * c, a * d + b * c, b * d]).unwrap();
        if !is_primitive(&f) {
            continue;
        }
        assert_eq!(density_isotropic_binary_closed_form(&f).unwrap(), density(&f).unwrap().density, "{f}");
        done += 1;
    }
}

#[test]
fn truncation_increases_to_the_density() {
    for s in ["x^2+y^2+z^2", "x^2-4*y^2", "x^2+y^2+7*z^2+7*w^2", "3*x^2+4*y^2+9*z^2", "x^2+5*x*y"] {
        let f = parse_form(s).unwrap();
        let d = density(&f).unwrap().density;
        let mut prev = rat(0, 1);
        for k in 0..16 {
            let t = delta_loc_truncated(&f, k).unwrap();
            assert!(t >= prev && t <= d, "{s} at K = {k}");
            prev = t;
        }
        assert!(&d - &prev < rat(1, 1000), "{s}");
    }
}

#[test]
fn scaling_divides_the_density() {
    for s in ["x^2+y^2+z^2", "x^2-y^2", "x^2+y^2+7*z^2+7*w^2", "x^2+x*y+y^2+z^2"] {
        let f = parse_form(s).unwrap();
        let d = density(&f).unwrap().density;
        for c in [2i64, 3, 6, 9, 25] {
            let g = f.scaled(c).unwrap();
            assert_eq!(density(&g).unwrap().density, &d / BigRational::from_integer(c.into()), "{s} scaled by {c}");
        }
    }
}

/// Diagonal ternaries and quaternaries built from `±u p^e` that are ADC at p.
fn adc_densities(p: u64) -> BTreeSet<BigRational> {
    let pi = p as i64;
    let units: Vec<i64> = if p == 2 { vec![1, 3, 5, 7] } else { vec![1, least_nonresidue(p) as i64] };
    let mut atoms = Vec::new();
    for &u in &units {
        for e in 0..3 {
            atoms.push(u * pi.pow(e));
            atoms.push(-u * pi.pow(e));
        }
    }
    let mut out = BTreeSet::new();
    for n in 3..=4 {
        let mut idx = vec![0usize; n];
        loop {
            if idx.windows(2).all(|w| w[0] <= w[1]) {
                let d: Vec<i64> = idx.iter().map(|&i| atoms[i]).collect();
                let f = QuadraticForm::diagonal(&d).unwrap();
                if is_primitive(&f) && is_adc_local(&f, p).unwrap() {
                    out.insert(local_density(&f, p).unwrap());
                }
            }
            let mut i = 0;
            while i < n && idx[i] + 1 == atoms.len() {
                idx[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
            idx[i] += 1;
        }
    }
    out
}

#[test]
fn adc_witnesses_realize_the_attainable_sets() {
    for p in [2u64, 3, 5] {
        let allowed: BTreeSet<BigRational> = attainable_local_density_set(p).unwrap().into_iter().collect();
        let found = adc_densities(p);
        assert!(found.is_subset(&allowed), "p = {p}: {found:?}");
        let q = p as i64;
        let expected = if p == 2 {
            vec![rat(5, 6), rat(11, 12), rat(1, 1)]
        } else {
            vec![rat(q + 2, 2 * q + 2), rat(2 * q + 1, 2 * q + 2), rat(1, 1)]
        };
        for v in expected {
            assert!(found.contains(&v), "p = {p} missing {v}");
        }
    }
}

#[test]
fn greedy_lands_inside_reachable_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let a = rng.gen_range(40..=95i64);
        let w = rng.gen_range(1..=(100 - a));
        let (alpha, beta) = (rat(a, 100), rat(a + w, 100));
        let plan = greedy_interval_product(&alpha, &beta).unwrap();
        assert!(plan.product > alpha && plan.product < beta);
        assert!(plan.primes.windows(2).all(|w| w[0] < w[1]));
    }
}

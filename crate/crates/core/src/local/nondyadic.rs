//! Closed-form representation tables over Z_p for odd p and n ≤ 4.
//!
//! A Jordan-diagonal form is scaled so its first coefficient of least
//! valuation is 1, matched against a catalog of normal forms
//! `t1^2 + a2 t2^2 + ...`, and the catalog table is mapped back through the
//! scaling. Classes are indexed `(1, r, p, r p)` with `r` the least
//! nonresidue.

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::numtheory::legendre_u64;

use super::jordan::odd_diagonal;
use super::RepresentationTable;

/// Exponent of a catalog coefficient in terms of the free parameters b, c, d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exp {
    TwoB,
    TwoBPlus1,
    TwoC,
    TwoCPlus1,
    TwoDPlus1,
    /// Any coefficient (any unit class) of valuation at least 2b.
    FreeAtLeastTwoB,
}

/// Coefficient `sign * r^nonresidue * p^exp` of a catalog normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoefTemplate {
    pub sign: i8,
    pub nonresidue: bool,
    pub exp: Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    None,
    BLeC,
    BLtC,
    DLeC,
    CLeD,
}

/// Table entry of a catalog case as a function of b, c, d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    Zero,
    TwoB,
    TwoBPlus1,
    TwoC,
    TwoCPlus1,
    TwoCPlus2,
    TwoDPlus1,
    Inf,
}

#[derive(Debug, Clone, Copy)]
pub struct CaseTemplate {
    pub name: &'static str,
    /// Coefficients after the leading `1`.
    pub coeffs: &'static [CoefTemplate],
    pub constraint: Constraint,
    pub table: [Entry; 4],
}

const fn co(sign: i8, nonresidue: bool, exp: Exp) -> CoefTemplate {
    CoefTemplate { sign, nonresidue, exp }
}

use Entry as E;
use Exp::*;

pub const CASES: &[CaseTemplate] = &[
    CaseTemplate { name: "<1, -p^2b>", coeffs: &[co(-1, false, TwoB)], constraint: Constraint::None, table: [E::Zero, E::TwoB, E::TwoBPlus1, E::TwoBPlus1] },
    CaseTemplate { name: "<1, -r·p^2b>", coeffs: &[co(-1, true, TwoB)], constraint: Constraint::None, table: [E::Zero, E::TwoB, E::Inf, E::Inf] },
    CaseTemplate { name: "<1, p^2b+1>", coeffs: &[co(1, false, TwoBPlus1)], constraint: Constraint::None, table: [E::Zero, E::Inf, E::TwoBPlus1, E::Inf] },
    CaseTemplate { name: "<1, r·p^2b+1>", coeffs: &[co(1, true, TwoBPlus1)], constraint: Constraint::None, table: [E::Zero, E::Inf, E::Inf, E::TwoBPlus1] },
    CaseTemplate { name: "<1, -p^2b, u·p^≥2b>", coeffs: &[co(-1, false, TwoB), co(1, false, FreeAtLeastTwoB)], constraint: Constraint::None, table: [E::Zero, E::TwoB, E::TwoBPlus1, E::TwoBPlus1] },
    CaseTemplate { name: "<1, -r·p^2b, -p^2c>", coeffs: &[co(-1, true, TwoB), co(-1, false, TwoC)], constraint: Constraint::BLeC, table: [E::Zero, E::TwoB, E::TwoCPlus1, E::TwoCPlus1] },
    CaseTemplate { name: "<1, -r·p^2b, -r·p^2c>", coeffs: &[co(-1, true, TwoB), co(-1, true, TwoC)], constraint: Constraint::BLeC, table: [E::Zero, E::TwoB, E::TwoCPlus1, E::TwoCPlus1] },
    CaseTemplate { name: "<1, -r·p^2b, p^2c+1>", coeffs: &[co(-1, true, TwoB), co(1, false, TwoCPlus1)], constraint: Constraint::BLeC, table: [E::Zero, E::TwoB, E::TwoCPlus1, E::Inf] },
    CaseTemplate { name: "<1, -r·p^2b, r·p^2c+1>", coeffs: &[co(-1, true, TwoB), co(1, true, TwoCPlus1)], constraint: Constraint::BLeC, table: [E::Zero, E::TwoB, E::Inf, E::TwoCPlus1] },
    CaseTemplate { name: "<1, p^2b+1, -p^2c>", coeffs: &[co(1, false, TwoBPlus1), co(-1, false, TwoC)], constraint: Constraint::BLtC, table: [E::Zero, E::TwoC, E::TwoBPlus1, E::TwoCPlus1] },
    CaseTemplate { name: "<1, p^2b+1, -p^2c+1>", coeffs: &[co(1, false, TwoBPlus1), co(-1, false, TwoCPlus1)], constraint: Constraint::BLeC, table: [E::Zero, E::TwoCPlus2, E::TwoBPlus1, E::TwoCPlus1] },
    CaseTemplate { name: "<1, p^2b+1, -r·p^2c>", coeffs: &[co(1, false, TwoBPlus1), co(-1, true, TwoC)], constraint: Constraint::BLtC, table: [E::Zero, E::TwoC, E::TwoBPlus1, E::Inf] },
    CaseTemplate { name: "<1, p^2b+1, -r·p^2c+1>", coeffs: &[co(1, false, TwoBPlus1), co(-1, true, TwoCPlus1)], constraint: Constraint::BLeC, table: [E::Zero, E::Inf, E::TwoBPlus1, E::TwoCPlus1] },
    CaseTemplate { name: "<1, r·p^2b+1, -p^2c>", coeffs: &[co(1, true, TwoBPlus1), co(-1, false, TwoC)], constraint: Constraint::BLtC, table: [E::Zero, E::TwoC, E::TwoCPlus1, E::TwoBPlus1] },
    CaseTemplate { name: "<1, r·p^2b+1, -r·p^2c+1>", coeffs: &[co(1, true, TwoBPlus1), co(-1, true, TwoCPlus1)], constraint: Constraint::BLeC, table: [E::Zero, E::TwoCPlus2, E::TwoCPlus1, E::TwoBPlus1] },
    CaseTemplate { name: "<1, r·p^2b+1, -r·p^2c>", coeffs: &[co(1, true, TwoBPlus1), co(-1, true, TwoC)], constraint: Constraint::BLtC, table: [E::Zero, E::TwoC, E::Inf, E::TwoBPlus1] },
    CaseTemplate { name: "<1, r·p^2b+1, -p^2c+1>", coeffs: &[co(1, true, TwoBPlus1), co(-1, false, TwoCPlus1)], constraint: Constraint::BLeC, table: [E::Zero, E::Inf, E::TwoCPlus1, E::TwoBPlus1] },
    CaseTemplate { name: "<1, -r·p^2b, r·p^2d+1, -p^2c+1>", coeffs: &[co(-1, true, TwoB), co(1, true, TwoDPlus1), co(-1, false, TwoCPlus1)], constraint: Constraint::DLeC, table: [E::Zero, E::TwoB, E::TwoCPlus1, E::TwoDPlus1] },
    CaseTemplate { name: "<1, -r·p^2b, p^2c+1, -r·p^2d+1>", coeffs: &[co(-1, true, TwoB), co(1, false, TwoCPlus1), co(-1, true, TwoDPlus1)], constraint: Constraint::CLeD, table: [E::Zero, E::TwoB, E::TwoCPlus1, E::TwoDPlus1] },
];

/// A diagonal coefficient `u p^exp` over Z_p, recorded by whether `u` is a square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagCoef {
    pub square: bool,
    pub exp: u32,
}

/// Table with `None` for an infinite entry.
pub type RawTable = [Option<u32>; 4];

fn unit_is_square(p: u64, sign: i8, nonresidue: bool) -> bool {
    let minus_one_sq = p % 4 == 1;
    let s = sign > 0 || minus_one_sq;
    s != nonresidue
}

fn try_assign(p: u64, case: &CaseTemplate, coeffs: &[DiagCoef]) -> Option<RawTable> {
    let (mut b, mut c, mut d): (Option<u32>, Option<u32>, Option<u32>) = (None, None, None);
    let set = |slot: &mut Option<u32>, val: u32| match *slot {
        Some(x) => x == val,
        None => {
            *slot = Some(val);
            true
        }
    };
    let mut free = Vec::new();
    for (t, a) in case.coeffs.iter().zip(coeffs) {
        if t.exp == FreeAtLeastTwoB {
            free.push(a.exp);
            continue;
        }
        if a.square != unit_is_square(p, t.sign, t.nonresidue) {
            return None;
        }
        let even = a.exp % 2 == 0;
        let ok = match t.exp {
            TwoB => even && set(&mut b, a.exp / 2),
            TwoBPlus1 => !even && set(&mut b, a.exp / 2),
            TwoC => even && set(&mut c, a.exp / 2),
            TwoCPlus1 => !even && set(&mut c, a.exp / 2),
            TwoDPlus1 => !even && set(&mut d, a.exp / 2),
            FreeAtLeastTwoB => unreachable!(),
        };
        if !ok {
            return None;
        }
    }
    if free.iter().any(|&e| b.map_or(true, |b| e < 2 * b)) {
        return None;
    }
    let ok = match case.constraint {
        Constraint::None => true,
        Constraint::BLeC => b? <= c?,
        Constraint::BLtC => b? < c?,
        Constraint::DLeC => d? <= c?,
        Constraint::CLeD => c? <= d?,
    };
    if !ok {
        return None;
    }
    let mut out = [None; 4];
    for (slot, e) in out.iter_mut().zip(case.table) {
        *slot = match e {
            E::Zero => Some(0),
            E::TwoB => Some(2 * b?),
            E::TwoBPlus1 => Some(2 * b? + 1),
            E::TwoC => Some(2 * c?),
            E::TwoCPlus1 => Some(2 * c? + 1),
            E::TwoCPlus2 => Some(2 * c? + 2),
            E::TwoDPlus1 => Some(2 * d? + 1),
            E::Inf => None,
        };
    }
    Some(out)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for perm in permutations(k - 1) {
        for pos in 0..=perm.len() {
            let mut q = perm.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Match the normal form `t1^2 + Σ coeffs` against the catalog, trying every
/// ordering of the non-leading coefficients.
pub fn match_case(p: u64, coeffs: &[DiagCoef]) -> Option<(&'static CaseTemplate, RawTable)> {
    for case in CASES.iter().filter(|c| c.coeffs.len() == coeffs.len()) {
        for perm in permutations(coeffs.len()) {
            let ordered: Vec<DiagCoef> = perm.iter().map(|&i| coeffs[i]).collect();
            if let Some(t) = try_assign(p, case, &ordered) {
                return Some((case, t));
            }
        }
    }
    None
}

/// Table of `a1 * g` from the table of `g`, where `a1 = r^eps u^2 p^k`.
pub fn scale_table(t: RawTable, nonresidue: bool, k: u32) -> RawTable {
    let sh = |x: Option<u32>| x.map(|v| v + k);
    let [a, b, c, d] = t.map(sh);
    match (nonresidue, k % 2 == 1) {
        (false, false) => [a, b, c, d],
        (false, true) => [c, d, a, b],
        (true, false) => [b, a, d, c],
        (true, true) => [d, c, b, a],
    }
}

/// Table of the diagonal form `Σ u_i p^{e_i} x_i^2`.
pub fn table_of_diagonal(p: u64, coeffs: &[DiagCoef]) -> Result<RawTable> {
    if coeffs.is_empty() {
        return Err(Error::Degenerate);
    }
    let lead = (0..coeffs.len()).min_by_key(|&i| (coeffs[i].exp, i)).expect("nonempty");
    let (lsq, k) = (coeffs[lead].square, coeffs[lead].exp);
    let normalized: Vec<DiagCoef> = coeffs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != lead)
        .map(|(_, c)| DiagCoef { square: c.square == lsq, exp: c.exp - k })
        .collect();
    let base = if normalized.is_empty() {
        // t1^2 alone: squares of units and their p^2 multiples.
        [Some(0), None, None, None]
    } else if let Some((_, t)) = match_case(p, &normalized) {
        t
    } else {
        orthogonal_fallback(p, &normalized)?
    };
    Ok(scale_table(base, !lsq, k))
}

/// `g ⊕ <c>` represents exactly the union over represented values `a` of `g`
/// of the values of `<a, c>`, and it suffices to take for `a` the minimal
/// representative of each class.
fn orthogonal_fallback(p: u64, normalized: &[DiagCoef]) -> Result<RawTable> {
    let mut g = vec![DiagCoef { square: true, exp: 0 }];
    g.extend_from_slice(&normalized[..normalized.len() - 1]);
    let last = normalized[normalized.len() - 1];
    let tg = table_of_diagonal(p, &g)?;
    let mut out: RawTable = [None; 4];
    for (s, v) in tg.iter().enumerate() {
        let Some(v) = *v else { continue };
        let a = DiagCoef { square: s % 2 == 0, exp: v };
        let tb = table_of_diagonal(p, &[a, last])?;
        for (o, x) in out.iter_mut().zip(tb) {
            *o = match (*o, x) {
                (Some(u), Some(w)) => Some(u.min(w)),
                (u, w) => u.or(w),
            };
        }
    }
    Ok(out)
}

/// Closed-form table over Z_p for odd p and n ≤ 4.
pub fn nondyadic_table_fastpath(f: &QuadraticForm, p: u64) -> Result<RepresentationTable> {
    if p == 2 {
        return Err(Error::Domain("closed-form tables need an odd prime".into()));
    }
    if f.n() > 4 {
        return Err(Error::Domain(format!("closed-form tables cover n ≤ 4, got n = {}", f.n())));
    }
    let diag = odd_diagonal(f, p)?;
    let coeffs: Vec<DiagCoef> = diag
        .iter()
        .map(|&(level, unit)| DiagCoef { square: legendre_u64(unit, p) == 1, exp: level as u32 })
        .collect();
    let raw = table_of_diagonal(p, &coeffs)?;
    RepresentationTable::from_raw(p, raw.to_vec())
}

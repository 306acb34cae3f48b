//! Local theory over Z_p: representability, representation tables and
//! local densities.
//!
//! The representation table of `f` at `p` lists, for each square class `s` of
//! Q_p (ordered as in [`SquareClassSystem`]), the least valuation `v_s` of an
//! element of `s` represented by `f` over Z_p, or `None` when no element of
//! the class is represented. Since `f(p x) = p^2 f(x)`, the represented
//! elements of `s` are exactly those of valuation `v_s, v_s + 2, ...`.

mod jordan;
mod nondyadic;
mod search;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{diagonalize_over_q, discriminant, hasse_of_diagonal, is_isotropic_local, QuadraticForm};
use crate::numtheory::{
    big_pow, hilbert_symbol, int_rat, pow_rat, valuation, Place, SquareClassSystem,
};

pub use jordan::{jordan_decomposition, zp_represents, JordanComponent, LocalForm};
pub use nondyadic::{
    match_case, nondyadic_table_fastpath, scale_table, table_of_diagonal, CaseTemplate, CoefTemplate, Constraint,
    DiagCoef, Entry, Exp, RawTable, CASES,
};
pub use search::{hensel_search_represents, local_density_bruteforce};

/// Local density δ_p(f), an exact rational in (0, 1].
pub type LocalDensity = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentationTable {
    pub p: u64,
    pub reps: Vec<i64>,
    /// `None` is an infinite entry.
    pub entries: Vec<Option<u32>>,
}

impl RepresentationTable {
    pub fn from_raw(p: u64, entries: Vec<Option<u32>>) -> Result<Self> {
        let sys = SquareClassSystem::new(p)?;
        if entries.len() != sys.len() {
            return Err(Error::Arity(format!("{} entries for {} classes", entries.len(), sys.len())));
        }
        Ok(Self { p, reps: sys.reps, entries })
    }

    /// Number of unit square classes (half the number of classes).
    pub fn nu(&self) -> u32 {
        (self.entries.len() / 2) as u32
    }

    fn rep_valuation(&self, s: usize) -> u32 {
        u32::from(s >= self.entries.len() / 2)
    }

    /// Local density from the table: Σ_s 1 / (ν p^{v_s - 1} (p + 1)).
    pub fn density(&self) -> LocalDensity {
        let p = self.p;
        let denom = BigRational::from_integer(BigInt::from(u64::from(self.nu()) * (p + 1)));
        self.entries
            .iter()
            .flatten()
            .map(|&v| pow_rat(p, 1 - i64::from(v)) / &denom)
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Measure of the represented p-adic integers of valuation below `k`.
    pub fn truncated_density(&self, k: u32) -> BigRational {
        let p = self.p;
        let nu = BigRational::from_integer(self.nu().into());
        let pm1 = BigRational::from_integer((p - 1).into());
        let mut total = BigRational::zero();
        for &v0 in self.entries.iter().flatten() {
            let mut v = v0;
            while v < k {
                total += &pm1 / (&nu * pow_rat(p, i64::from(v) + 1));
                v += 2;
            }
        }
        total
    }

    /// Every class with a finite entry is hit at the valuation of its representative.
    pub fn is_adc(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(s, e)| e.map_or(true, |v| v == self.rep_valuation(s)))
    }

    pub fn is_universal(&self) -> bool {
        self.entries.iter().enumerate().all(|(s, e)| *e == Some(self.rep_valuation(s)))
    }

    /// Is `m` (nonzero) represented over Z_p, given its valuation and unit class?
    pub fn contains(&self, m: &BigInt) -> Result<bool> {
        let pv = valuation(m, self.p)?;
        let sys = SquareClassSystem { p: self.p, reps: self.reps.clone(), nu: self.nu() };
        let s = sys.class_of_unit(pv.v % 2, &pv.unit);
        Ok(self.entries[s].map_or(false, |v| pv.v >= v))
    }
}

impl fmt::Display for RepresentationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.entries.iter().map(|e| e.map_or_else(|| "inf".to_string(), |v| v.to_string())).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum JsonEntry {
    Finite(u32),
    Inf(&'static str),
}

impl Serialize for RepresentationTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<JsonEntry> =
            self.entries.iter().map(|e| e.map_or(JsonEntry::Inf("inf"), JsonEntry::Finite)).collect();
        let mut st = serializer.serialize_struct("RepresentationTable", 3)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("reps", &self.reps)?;
        st.serialize_field("v", &v)?;
        st.end()
    }
}

/// Does `f` represent some element of square class `s` over Q_p?
pub fn qp_represents_class(f: &QuadraticForm, p: u64, s: usize) -> Result<bool> {
    let sys = SquareClassSystem::new(p)?;
    if s >= sys.len() {
        return Err(Error::Arity(format!("class index {s} out of range")));
    }
    let place = Place::Finite(p);
    let rep = int_rat(sys.reps[s]);
    match f.n() {
        1 => Ok(sys.classify(&int_rat(f.c(0, 0)))?.index == s),
        2 => {
            let mut d = diagonalize_over_q(f);
            d.push(-rep);
            let prod = d.iter().fold(BigRational::one(), |a, b| a * b);
            let c = hasse_of_diagonal(&d, place)? * hilbert_symbol(&int_rat(-1), &-prod, place)?;
            Ok(c == 1)
        }
        3 => {
            if is_isotropic_local(f, place)? {
                return Ok(true);
            }
            Ok(sys.classify(&-discriminant(f))?.index != s)
        }
        _ => Ok(true),
    }
}

/// Largest `i` scanned when searching for `v_s` among `rep * p^{2i}`.
pub fn scan_ceiling(f: &QuadraticForm, p: u64) -> Result<u32> {
    let d4 = f.det_doubled_gram() * 4;
    Ok(valuation(&d4, p)?.v + 2 * f.n() as u32 + 4)
}

/// Representation table computed by the generic Z_p decision procedure.
pub fn representation_table(f: &QuadraticForm, p: u64) -> Result<RepresentationTable> {
    let lf = LocalForm::new(f, p)?;
    table_with(&lf, f)
}

pub(crate) fn table_with(lf: &LocalForm, f: &QuadraticForm) -> Result<RepresentationTable> {
    let p = lf.p();
    let sys = SquareClassSystem::new(p)?;
    let ceiling = scan_ceiling(f, p)?;
    let mut entries = Vec::with_capacity(sys.len());
    for s in 0..sys.len() {
        if !qp_represents_class(f, p, s)? {
            entries.push(None);
            continue;
        }
        let v0 = sys.rep_valuation(s);
        let unit = BigInt::from(sys.reps[s]) / big_pow(p, v0);
        let found = (0..=ceiling).map(|i| v0 + 2 * i).find(|&v| lf.represents_pv(v, &unit));
        entries.push(Some(found.ok_or(Error::ScanCeilingExceeded { p, class: s })?));
    }
    Ok(RepresentationTable { p, reps: sys.reps, entries })
}

pub fn local_density(f: &QuadraticForm, p: u64) -> Result<LocalDensity> {
    Ok(representation_table(f, p)?.density())
}

pub fn truncated_local_density(table: &RepresentationTable, k: u32) -> BigRational {
    table.truncated_density(k)
}

pub fn is_locally_universal(f: &QuadraticForm, p: u64) -> Result<bool> {
    Ok(representation_table(f, p)?.is_universal())
}

pub fn is_adc_local(f: &QuadraticForm, p: u64) -> Result<bool> {
    Ok(representation_table(f, p)?.is_adc())
}

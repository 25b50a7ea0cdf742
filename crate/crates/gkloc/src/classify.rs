//! Predicates on special cycles: where the supersingular part lives, when its
//! components are irreducible, and which places obstruct representation.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic_core::{prime_factors, Place, PrimeContext};
use crate::qform::{diagonal_entries, diagonalize, represented_over, DiagonalForm, SymForm};
use crate::Rat;

/// Inert or split behaviour of `p` in the real quadratic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimeCase {
    Inert,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Locus {
    Empty,
    IsolatedSuperspecial,
    ContainsComponents,
    /// Rank at most 2: the cycle is not confined to the supersingular locus.
    OrdinaryPossible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleClassification {
    pub locus: Locus,
    pub reasons: Vec<String>,
}

/// Supersingular behaviour of `Z(T)` at `p` from `T` and its reduction mod `p`.
pub fn classify_cycle(ctx: &PrimeContext, t: &SymForm, case: PrimeCase) -> Result<CycleClassification> {
    if t.det().is_zero() {
        return Err(Error::Singular);
    }
    let n = t.rank();
    let done = |locus, reasons: Vec<String>| Ok(CycleClassification { locus, reasons });
    if let Some(e) = t.non_integral_entry(ctx) {
        return done(Locus::Empty, vec![format!("entry {e} is not p-integral, so no special endomorphism has this Gram matrix")]);
    }
    let (locus, reason) = match case {
        PrimeCase::Split => (
            Locus::IsolatedSuperspecial,
            "p splits: the supersingular locus is a finite set of isolated points".to_string(),
        ),
        PrimeCase::Inert => supersingular_inert(ctx, t)?,
    };
    if n <= 2 && locus != Locus::Empty {
        return done(
            Locus::OrdinaryPossible,
            vec![format!("rank {n} cycle may meet the ordinary locus"), format!("supersingular part: {reason}")],
        );
    }
    done(locus, vec![reason])
}

fn supersingular_inert(ctx: &PrimeContext, t: &SymForm) -> Result<(Locus, String)> {
    let d = diagonalize(ctx, t)?;
    let unit_idx: Vec<usize> = (0..d.rank()).filter(|&i| d.exps()[i] == 0).collect();
    Ok(match unit_idx.len() {
        0 => (Locus::ContainsComponents, "T = 0 mod p: the image is a union of components of the supersingular locus".into()),
        1 => (Locus::IsolatedSuperspecial, "reduction mod p has rank 1: only superspecial points".into()),
        2 => {
            let eps = d.chi(unit_idx[0]) * d.chi(unit_idx[1]) * crate::arith::legendre(-1, ctx.p());
            if eps == -1 {
                (Locus::Empty, "reduction mod p has rank 2 and is anisotropic modulo its radical".into())
            } else {
                (Locus::IsolatedSuperspecial, "reduction mod p has rank 2 and is isotropic: only superspecial points".into())
            }
        }
        r => (Locus::Empty, format!("reduction mod p has rank {r} > 2")),
    })
}

/// Whether every connected component of the supersingular part of `Z(T)` is a
/// single projective line: `T ~ diag(p, ε₂p, ε₃p^{a₃})` with `a₃` odd, and
/// `a₃ = 1` when `χ(-ε₂) = -1`.
pub fn hz_irreducible(t: &DiagonalForm) -> Result<bool> {
    if t.rank() != 3 {
        return Err(Error::RankMismatch { expected: 3, got: t.rank() });
    }
    let a = t.exps();
    if a[0] < 1 {
        return Err(Error::Domain(format!("{t} is not divisible by p")));
    }
    let ctx = t.ctx();
    let chi = t.chi(0) * t.chi(1) * crate::arith::legendre(-1, ctx.p());
    Ok(a[0] == 1 && a[1] == 1 && a[2] % 2 == 1 && (chi == 1 || a[2] == 1))
}

/// Irreducibility criterion for rank-4 `T` (Siegel threefold case), transcribed literally.
pub fn siegel_irreducible(t: &DiagonalForm) -> Result<bool> {
    if t.rank() != 4 {
        return Err(Error::RankMismatch { expected: 4, got: t.rank() });
    }
    let a = t.exps();
    if a.windows(2).any(|w| w[0] > w[1]) || a[0] < 0 {
        return Err(Error::Domain(format!("exponents of {t} must be sorted and nonnegative")));
    }
    let chi_m1 = crate::arith::legendre(-1, t.ctx().p());
    let chi_neg = |i: usize, j: usize| chi_m1 * t.chi(i) * t.chi(j);
    Ok(if a[0] % 2 == 0 {
        a[0] == 0
            && t.chi(0) == -1
            && a[1..].iter().all(|x| x % 2 == 1)
            && if chi_neg(1, 2) == 1 { a[2] == 1 } else { a[3] == 1 }
    } else {
        a[0] == 1 && if chi_neg(0, 1) == 1 { a[1] == 1 } else { a[2] == 1 }
    })
}

/// The global quaternary space `diag(1, -1, 1, -d)` of signature (2, 2).
pub fn global_space(d: i64) -> Vec<Rat> {
    crate::qform::rats(&[1, -1, 1, -d])
}

fn rational_diagonal(t: &SymForm) -> Result<Vec<Rat>> {
    // exact rational congruence; the prime only steers pivot choice
    diagonal_entries(&PrimeContext::new(3)?, t)
}

/// Places where `T` is not represented: finite `ℓ` by local invariants of
/// `diag(1,-1,1,-d)`, the real place whenever `T` is not positive definite.
pub fn diff_set(t: &SymForm, d: i64) -> Result<BTreeSet<Place>> {
    if t.rank() != 3 {
        return Err(Error::RankMismatch { expected: 3, got: t.rank() });
    }
    if d == 0 {
        return Err(Error::Domain("d must be nonzero".into()));
    }
    let diag = rational_diagonal(t)?;
    let v = global_space(d);
    let mut out = BTreeSet::new();
    if !diag.iter().all(|x| x.is_positive()) {
        out.insert(Place::Real);
    }
    let mut bad = BigInt::from(2) * BigInt::from(d);
    for x in &diag {
        bad *= x.numer() * x.denom();
    }
    for l in prime_factors(&bad.abs()) {
        if !represented_over(&diag, &v, Place::Finite(l))? {
            out.insert(Place::Finite(l));
        }
    }
    Ok(out)
}

/// `p` is inert in `Q(√d)` when `d` is a non-residue mod `p`.
pub fn prime_case(p: u64, d: i64) -> Result<PrimeCase> {
    match crate::arith::legendre(d as i128, p) {
        -1 => Ok(PrimeCase::Inert),
        1 => Ok(PrimeCase::Split),
        _ => Err(Error::Domain(format!("p = {p} ramifies in Q(sqrt {d})"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regularity {
    pub regular: bool,
    pub diff: BTreeSet<Place>,
    pub reason: String,
}

/// Regularity of a positive definite `T` at level `N`.
pub fn is_regular(t: &SymForm, d: i64, level: u64) -> Result<Regularity> {
    let diff = diff_set(t, d)?;
    let verdict = |regular: bool, reason: String| Ok(Regularity { regular, diff: diff.clone(), reason });
    let p = match diff.iter().collect::<Vec<_>>().as_slice() {
        [Place::Finite(p)] => *p,
        [Place::Real] => return verdict(false, "Diff is the real place".into()),
        other => return verdict(false, format!("|Diff| = {} is not 1", other.len())),
    };
    if level.is_multiple_of(p) {
        return verdict(false, format!("p = {p} divides the level {level}"));
    }
    if p != 2 && prime_case(p, d).ok() == Some(PrimeCase::Inert) {
        let divisible = t.half_gram().iter().all(|x| {
            let y = x / Rat::from_integer(p.into());
            y.is_zero() || crate::padic_core::ordp(p, &y).unwrap() >= 0
        });
        if divisible {
            return verdict(false, format!("p = {p} is inert and divides T"));
        }
    }
    verdict(true, format!("Diff = {{{p}}}, p does not divide the level"))
}

/// `|Diff(T)|` is odd for positive definite `T`. Negative definite `T` can give
/// an even count: the real Hasse invariant then agrees with `(4,0)` although
/// the signature does not.
pub fn diff_parity_ok(t: &SymForm, d: i64) -> Result<bool> {
    Ok(diff_set(t, d)?.len() % 2 == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_core::UnitClass::{Delta as D, One as I};
    use num_traits::One;

    fn c3() -> PrimeContext {
        PrimeContext::new(3).unwrap()
    }

    #[test]
    fn locus_cases() {
        let c = c3();
        let third = SymForm::diag(&[Rat::new(1.into(), 3.into()), Rat::one(), Rat::one()]);
        assert_eq!(classify_cycle(&c, &third, PrimeCase::Inert).unwrap().locus, Locus::Empty);
        let units = SymForm::from_ints(3, &[1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        assert_eq!(classify_cycle(&c, &units, PrimeCase::Inert).unwrap().locus, Locus::Empty);
        let zero = SymForm::from_ints(3, &[3, 0, 0, 0, 3, 0, 0, 0, 9]).unwrap();
        assert_eq!(classify_cycle(&c, &zero, PrimeCase::Inert).unwrap().locus, Locus::ContainsComponents);
        assert_eq!(classify_cycle(&c, &zero, PrimeCase::Split).unwrap().locus, Locus::IsolatedSuperspecial);
        // diag(1,1): -1 is a non-square mod 3, so the plane is anisotropic
        let aniso = SymForm::from_ints(3, &[1, 0, 0, 0, 1, 0, 0, 0, 3]).unwrap();
        assert_eq!(classify_cycle(&c, &aniso, PrimeCase::Inert).unwrap().locus, Locus::Empty);
        let iso = SymForm::from_ints(3, &[1, 0, 0, 0, 2, 0, 0, 0, 3]).unwrap();
        assert_eq!(classify_cycle(&c, &iso, PrimeCase::Inert).unwrap().locus, Locus::IsolatedSuperspecial);
    }

    #[test]
    fn irreducibility_examples() {
        // p = 5: chi(-1) = 1
        let c5 = PrimeContext::new(5).unwrap();
        assert!(hz_irreducible(&DiagonalForm::new(c5, vec![1, 1, 3], vec![I, I, I])).unwrap());
        assert!(!hz_irreducible(&DiagonalForm::new(c5, vec![1, 1, 3], vec![I, D, I])).unwrap());
        assert!(!hz_irreducible(&DiagonalForm::new(c5, vec![1, 1, 2], vec![I, I, I])).unwrap());
        let f = |a: [i64; 4], u| DiagonalForm::raw(c3(), a.to_vec(), u);
        assert!(siegel_irreducible(&f([0, 1, 1, 1], vec![D, I, D, I])).unwrap());
        assert!(siegel_irreducible(&f([1, 1, 3, 5], vec![I, D, I, I])).unwrap());
        assert!(!siegel_irreducible(&f([2, 3, 3, 3], vec![I, I, I, I])).unwrap());
    }

    #[test]
    fn diff_examples() {
        let pd = SymForm::from_ints(3, &[1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        let diff = diff_set(&pd, 2).unwrap();
        assert_eq!(diff.len() % 2, 1);
        let indefinite = SymForm::from_ints(3, &[1, 0, 0, 0, 1, 0, 0, 0, -1]).unwrap();
        assert!(diff_set(&indefinite, 2).unwrap().contains(&Place::Real));
    }
}

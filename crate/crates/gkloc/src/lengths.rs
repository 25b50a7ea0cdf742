//! Local lengths of special cycles at isolated points.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qform::DiagonalForm;
use crate::Rat;

/// Parity of the middle exponent `a₂`, which selects the formula branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthCase {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthResult {
    pub value: Rat,
    pub case: LengthCase,
    pub input: DiagonalForm,
    /// False when `a₁ ≠ 0` or the value is not an integer; the formula is
    /// only meaningful where the vanishing condition forces `a₃` odd for even `a₂`.
    pub in_domain: bool,
}

/// Gross–Keating length `e_p(T)`; units are ignored.
pub fn e_p(t: &DiagonalForm) -> Result<LengthResult> {
    if t.rank() != 3 {
        return Err(Error::RankMismatch { expected: 3, got: t.rank() });
    }
    let p = t.ctx().p();
    let (a1, a2, a3) = (t.exps()[0], t.exps()[1], t.exps()[2]);
    if a1 < 0 || a2 < a1 || a3 < a2 {
        return Err(Error::Domain(format!("exponents must satisfy 0 <= a1 <= a2 <= a3, got ({a1},{a2},{a3})")));
    }
    let pw = |i: i64| Rat::from_integer(BigInt::from(p).pow(i as u32));
    let ri = |x: i64| Rat::from_integer(x.into());
    let mut value = Rat::zero();
    let case = if a2 % 2 == 0 {
        for i in 0..a2 / 2 {
            value += ri(a2 + a3 - 4 * i) * pw(i);
        }
        value += Rat::new((a3 - a2 + 1).into(), 2.into()) * pw(a2 / 2);
        LengthCase::Even
    } else {
        for i in 0..=(a2 - 1) / 2 {
            value += ri(a2 + a3 - 4 * i) * pw(i);
        }
        LengthCase::Odd
    };
    let in_domain = a1 == 0 && value.is_integer();
    Ok(LengthResult { value, case, input: t.clone(), in_domain })
}

/// Split-prime length; the same formula as the inert case.
pub fn e_p_split(t: &DiagonalForm) -> Result<LengthResult> {
    e_p(t)
}

/// Length `p^{ord_p det T}` of the ordinary locus of a binary cycle.
pub fn ordinary_length(t: &DiagonalForm) -> Result<BigInt> {
    if t.rank() != 2 {
        return Err(Error::RankMismatch { expected: 2, got: t.rank() });
    }
    if let Some(a) = t.exps().iter().find(|&&a| a % 2 != 0 || a < 0) {
        return Err(Error::Domain(format!(
            "ordinary points need every diagonal exponent even and nonnegative, found {a}"
        )));
    }
    Ok(BigInt::from(t.ctx().p()).pow(t.det_exp() as u32))
}

/// Transversal intersection at an isolated point: `ord_p det T = 1`.
pub fn transversality(t: &DiagonalForm) -> bool {
    t.rank() == 3 && t.det_exp() == 1
}

/// `e_p` as an integer, when it is one.
pub fn e_p_int(t: &DiagonalForm) -> Result<BigInt> {
    let r = e_p(t)?;
    if !r.value.is_integer() {
        return Err(Error::Domain(format!("length of {} is not an integer", t)));
    }
    Ok(r.value.to_integer())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_core::{PrimeContext, UnitClass};

    fn form(p: u64, a: [i64; 3]) -> DiagonalForm {
        DiagonalForm::raw(PrimeContext::new(p).unwrap(), a.to_vec(), vec![UnitClass::One; 3])
    }

    #[test]
    fn examples() {
        assert_eq!(e_p(&form(3, [0, 0, 1])).unwrap().value, Rat::from_integer(1.into()));
        assert_eq!(e_p(&form(3, [0, 1, 1])).unwrap().value, Rat::from_integer(2.into()));
        assert_eq!(e_p(&form(3, [0, 2, 3])).unwrap().value, Rat::from_integer(8.into()));
        let half = e_p(&form(3, [0, 0, 0])).unwrap();
        assert!(!half.in_domain);
    }

    #[test]
    fn ordinary_and_transversal() {
        let c3 = PrimeContext::new(3).unwrap();
        let c5 = PrimeContext::new(5).unwrap();
        let b = |c, a: [i64; 2]| DiagonalForm::raw(c, a.to_vec(), vec![UnitClass::One; 2]);
        assert_eq!(ordinary_length(&b(c3, [0, 0])).unwrap(), 1.into());
        assert_eq!(ordinary_length(&b(c3, [0, 2])).unwrap(), 9.into());
        assert_eq!(ordinary_length(&b(c5, [2, 2])).unwrap(), 625.into());
        assert!(ordinary_length(&b(c3, [0, 1])).is_err());
        assert!(transversality(&form(3, [0, 0, 1])));
        assert!(!transversality(&form(3, [0, 0, 0])));
        assert!(!transversality(&form(3, [0, 1, 1])));
    }
}

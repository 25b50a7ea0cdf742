//! Local Whittaker values and derivatives at `s = 0`, kept exact: a rational
//! magnitude times an opaque Weil index `γ` and an optional symbolic `log p`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::classify::{classify_cycle, is_regular, CycleClassification, PrimeCase};
use crate::density::{a_polynomial, derivative_at_one, diag_from_ints, evaluate_reduction, reduce, NamedForm};
use crate::error::{Error, Result};
use crate::lengths::e_p;
use crate::padic_core::{Place, PrimeContext};
use crate::qform::{diagonalize, represented_over, represents_locally, DiagonalForm, QuadSpace, SymForm};
use crate::Rat;

/// The Weil index attached to `V_p` or to its twist `V'_p`; `γ(V_p) = -γ(V'_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GammaToken {
    #[serde(rename = "gV")]
    V,
    #[serde(rename = "gV'")]
    VPrime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhittakerValue {
    #[serde(with = "crate::qform::rat_serde")]
    pub magnitude: Rat,
    pub gamma: GammaToken,
    /// 0 for a value, 1 for a derivative carrying one factor `log p`.
    pub logp: u8,
}

impl WhittakerValue {
    /// The same quantity written with the other token.
    pub fn in_terms_of(&self, token: GammaToken) -> WhittakerValue {
        if token == self.gamma {
            return self.clone();
        }
        WhittakerValue { magnitude: -&self.magnitude, gamma: token, logp: self.logp }
    }
}

impl fmt::Display for WhittakerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = match self.gamma {
            GammaToken::V => "gamma(V_p)",
            GammaToken::VPrime => "gamma(V'_p)",
        };
        write!(f, "{} * {}", self.magnitude, g)?;
        if self.logp == 1 {
            f.write_str(" * log p")?;
        }
        Ok(())
    }
}

/// The twisted space at a split prime: `diag(1, -Δ, -p, pΔ)`.
pub fn split_twisted_space(ctx: &PrimeContext) -> Vec<Rat> {
    let (p, d) = (ctx.p() as i64, ctx.delta() as i64);
    crate::qform::rats(&[1, -d, -p, p * d])
}

fn integral(t: &DiagonalForm) -> bool {
    t.exps().iter().all(|&a| a >= 0)
}

fn check_hypotheses(t: &DiagonalForm, case: PrimeCase) -> Result<()> {
    if t.rank() != 3 {
        return Err(Error::RankMismatch { expected: 3, got: t.rank() });
    }
    match case {
        PrimeCase::Inert => {
            if t.exps()[0] != 0 {
                return Err(Error::Unsupported(format!("{t} is 0 mod p; the inert formulas need T != 0 mod p")));
            }
            if !represents_locally(t, QuadSpace::VPrime)? {
                return Err(Error::Unsupported(format!("{t} is not represented by V'_p")));
            }
        }
        PrimeCase::Split => {
            if !represented_over(&t.entries(), &split_twisted_space(t.ctx()), Place::Finite(t.ctx().p()))? {
                return Err(Error::Unsupported(format!("{t} is not represented by the twisted space at a split prime")));
            }
        }
    }
    Ok(())
}

fn pw(ctx: &PrimeContext, k: i64) -> Rat {
    ctx.p_pow(k)
}

/// Closed value `W_{T,p}(e, 0, Φ'_p)`.
pub fn whittaker_value(t: &DiagonalForm, case: PrimeCase) -> Result<WhittakerValue> {
    let zero = WhittakerValue { magnitude: Rat::zero(), gamma: GammaToken::VPrime, logp: 0 };
    if !integral(t) {
        return Ok(zero);
    }
    check_hypotheses(t, case)?;
    let ctx = t.ctx();
    let p = Rat::from_integer(ctx.p().into());
    let magnitude = match case {
        PrimeCase::Inert => Rat::from_integer(2.into()) * pw(ctx, -4) * (&p * &p - Rat::one()),
        PrimeCase::Split => Rat::from_integer(2.into()) * pw(ctx, -4) * (&p + Rat::one()) * (&p + Rat::one()),
    };
    Ok(WhittakerValue { magnitude, gamma: GammaToken::VPrime, logp: 0 })
}

/// The same value through `γ(V'_p) |det S'|^{3/2} α_p(S', T)`, with the density
/// from the reduction pipeline (residual counted at precision `prec`).
pub fn whittaker_value_via_density(t: &DiagonalForm, case: PrimeCase, prec: u32) -> Result<WhittakerValue> {
    if !integral(t) {
        return Ok(WhittakerValue { magnitude: Rat::zero(), gamma: GammaToken::VPrime, logp: 0 });
    }
    check_hypotheses(t, case)?;
    let ctx = t.ctx();
    let s_prime = match case {
        PrimeCase::Inert => NamedForm::SPrime.diagonal(ctx),
        PrimeCase::Split => {
            let (p, d) = (ctx.p() as i64, ctx.delta() as i64);
            diag_from_ints(ctx, &[1, -d, -p, p * d])
        }
    };
    let alpha = evaluate_reduction(&reduce(&s_prime, t)?, prec)?.value;
    // |det S'|_p = p^{-2}
    Ok(WhittakerValue { magnitude: pw(ctx, -3) * alpha, gamma: GammaToken::VPrime, logp: 0 })
}

/// Closed derivative `W'_{T,p}(e, 0, Φ_p)` in units of `γ(V_p) log p`.
pub fn whittaker_derivative(t: &DiagonalForm, case: PrimeCase) -> Result<WhittakerValue> {
    if !integral(t) {
        return Ok(WhittakerValue { magnitude: Rat::zero(), gamma: GammaToken::V, logp: 1 });
    }
    check_hypotheses(t, case)?;
    let len = e_p(t)?;
    if !len.in_domain {
        return Err(Error::Unsupported(format!("length of {t} is outside the range of the formula")));
    }
    let ctx = t.ctx();
    let (m2, one) = (pw(ctx, -2), Rat::one());
    let factor = match case {
        PrimeCase::Inert => (&one + &m2) * (&one - &m2),
        PrimeCase::Split => (&one - &m2) * (&one - &m2),
    };
    Ok(WhittakerValue { magnitude: factor * len.value, gamma: GammaToken::V, logp: 1 })
}

/// `-log p · γ(V_p) · ∂_X A_{S,T}(X)|_{X=1}` with `S` the self-dual lattice of `V_p`.
pub fn whittaker_derivative_via_density(t: &DiagonalForm, case: PrimeCase) -> Result<WhittakerValue> {
    let ambient = match case {
        PrimeCase::Inert => NamedForm::S,
        PrimeCase::Split => NamedForm::H4,
    };
    let a = a_polynomial(ambient, t)?;
    Ok(WhittakerValue { magnitude: -derivative_at_one(&a), gamma: GammaToken::V, logp: 1 })
}

/// The local part `e_p(T) · log p` of the degree of a regular cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeFactor {
    #[serde(with = "crate::qform::rat_serde")]
    pub e_p: Rat,
    pub prime: u64,
    pub logp: u8,
    pub regular: bool,
    pub local_form: String,
    pub classification: CycleClassification,
}

/// Local degree factor of a regular positive definite `T` for `k = Q(√d)` at level `N`.
pub fn degree_factor(t: &SymForm, d: i64, level: u64) -> Result<DegreeFactor> {
    let reg = is_regular(t, d, level)?;
    if !reg.regular {
        return Err(Error::NotRegular(reg.reason));
    }
    let p = match reg.diff.iter().next() {
        Some(Place::Finite(p)) => *p,
        _ => unreachable!("regular T has a finite Diff"),
    };
    let ctx = PrimeContext::new(p)?;
    let local = diagonalize(&ctx, t)?;
    let case = crate::classify::prime_case(p, d).unwrap_or(PrimeCase::Inert);
    let classification = classify_cycle(&ctx, t, case)?;
    let len = e_p(&local)?;
    Ok(DegreeFactor {
        e_p: len.value,
        prime: p,
        logp: 1,
        regular: true,
        local_form: local.label(),
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_core::UnitClass::{Delta as D, One as I};

    #[test]
    fn token_ratio() {
        let w = WhittakerValue { magnitude: Rat::one(), gamma: GammaToken::V, logp: 1 };
        assert_eq!(w.in_terms_of(GammaToken::VPrime).magnitude, -Rat::one());
        assert_eq!(w.in_terms_of(GammaToken::V), w);
    }

    #[test]
    fn closed_values() {
        let c = PrimeContext::new(3).unwrap();
        let t = DiagonalForm::new(c, vec![0, 0, 1], vec![I, D, I]);
        assert!(represents_locally(&t, QuadSpace::VPrime).unwrap());
        let v = whittaker_value(&t, PrimeCase::Inert).unwrap();
        assert_eq!(v.magnitude, Rat::new(16.into(), 81.into()));
        let dv = whittaker_derivative(&t, PrimeCase::Inert).unwrap();
        assert_eq!(dv.magnitude, Rat::new(80.into(), 81.into()));
        assert_eq!(dv, whittaker_derivative_via_density(&t, PrimeCase::Inert).unwrap());
        let frac = DiagonalForm::raw(c, vec![-1, 0, 1], vec![I, I, I]);
        assert!(whittaker_value(&frac, PrimeCase::Inert).unwrap().magnitude.is_zero());
    }
}

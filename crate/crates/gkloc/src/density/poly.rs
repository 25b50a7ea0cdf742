use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::padic_core::PrimeContext;
use crate::Rat;

/// A polynomial in `X` with rational coefficients; `X = p^{-r}` selects the
/// ambient form `S ⊥ H_{2r}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityPolynomial {
    coeffs: Vec<Rat>,
    tag: String,
}

impl DensityPolynomial {
    pub fn new(mut coeffs: Vec<Rat>, tag: impl Into<String>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs, tag: tag.into() }
    }

    pub fn constant(c: Rat, tag: impl Into<String>) -> Self {
        Self::new(vec![c], tag)
    }

    /// `c X^k`.
    pub fn monomial(c: Rat, k: usize, tag: impl Into<String>) -> Self {
        let mut v = vec![Rat::zero(); k + 1];
        v[k] = c;
        Self::new(v, tag)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    /// Which closed-form identity produced this polynomial.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Value at `X = p^{-r}`.
    pub fn eval_at_r(&self, ctx: &PrimeContext, r: u32) -> Rat {
        self.eval(&ctx.p_pow(-(r as i64)))
    }

    pub fn derivative(&self) -> Self {
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Rat::from_integer(k.into()))
            .collect();
        Self::new(c, format!("d/dX {}", self.tag))
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect(), self.tag.clone())
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect(), self.tag.clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::new(vec![], self.tag.clone());
        }
        let mut c = vec![Rat::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c, self.tag.clone())
    }

    /// Exact quotient; fails unless `d` divides `self`.
    pub fn div_exact(&self, d: &Self) -> Result<Self> {
        let dd = d.degree().ok_or(Error::ZeroArgument)?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return if self.is_zero() {
                Ok(self.clone())
            } else {
                Err(Error::Domain("polynomial division leaves a remainder".into()))
            };
        }
        let lead = d.coeffs[dd].clone();
        let mut q = vec![Rat::zero(); rem.len() - dd];
        for k in (0..q.len()).rev() {
            let f = &rem[k + dd] / &lead;
            for (j, c) in d.coeffs.iter().enumerate() {
                rem[k + j] -= &f * c;
            }
            q[k] = f;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(Error::Domain("polynomial division leaves a remainder".into()));
        }
        Ok(Self::new(q, self.tag.clone()))
    }
}

impl fmt::Display for DensityPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})X"),
                _ => format!("({c})X^{k}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

/// Value of `dA/dX` at `X = 1`.
pub fn derivative_at_one(a: &DensityPolynomial) -> Rat {
    a.derivative().eval(&Rat::one())
}

/// Laurent polynomial in `X`, used while `p^r` still appears as `X^{-1}`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Laurent(BTreeMap<i64, Rat>);

impl Laurent {
    /// `c · p^e · X^k`.
    pub fn term(ctx: &PrimeContext, c: i64, e: i64, k: i64) -> Self {
        let mut m = BTreeMap::new();
        m.insert(k, Rat::from_integer(c.into()) * ctx.p_pow(e));
        Self(m)
    }

    pub fn add(mut self, o: &Self) -> Self {
        for (k, c) in &o.0 {
            *self.0.entry(*k).or_insert_with(Rat::zero) += c;
        }
        self
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut m: BTreeMap<i64, Rat> = BTreeMap::new();
        for (i, a) in &self.0 {
            for (j, b) in &o.0 {
                *m.entry(i + j).or_insert_with(Rat::zero) += a * b;
            }
        }
        Self(m)
    }

    pub fn into_poly(self, tag: &str) -> Result<DensityPolynomial> {
        let mut v = Vec::new();
        for (k, c) in self.0 {
            if c.is_zero() {
                continue;
            }
            if k < 0 {
                return Err(Error::Domain(format!("negative power X^{k} in density")));
            }
            let k = k as usize;
            if v.len() <= k {
                v.resize(k + 1, Rat::zero());
            }
            v[k] += c;
        }
        Ok(DensityPolynomial::new(v, tag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(a.into(), b.into())
    }

    #[test]
    fn derivative_examples() {
        let c = DensityPolynomial::constant(r(5, 3), "c");
        assert_eq!(derivative_at_one(&c), r(0, 1));
        let l = DensityPolynomial::new(vec![r(1, 1), r(1, 9)], "l");
        assert_eq!(derivative_at_one(&l), r(1, 9));
    }

    #[test]
    fn division_roundtrip() {
        let a = DensityPolynomial::new(vec![r(1, 1), r(-1, 9)], "a");
        let b = DensityPolynomial::new(vec![r(2, 1), r(0, 1), r(3, 7)], "b");
        assert_eq!(a.mul(&b).div_exact(&a).unwrap().coeffs(), b.coeffs());
        assert!(b.div_exact(&a).is_err());
    }
}

//! Quadratic forms over `Z_(p)`: Jordan splitting to diagonal normal form,
//! local invariants and local representability.
//!
//! Matrices follow the half-Gram convention: the matrix `S` of a form `Q`
//! satisfies `Q(x) = xᵗ S x`, so off-diagonal entries may be halves.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic_core::{hilbert_symbol, prime_factors, Place, PrimeContext, UnitClass};
use crate::Rat;

/// Whether stored entries are the matrix of `Q` or the Gram matrix of `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    HalfGram,
    FullGram,
}

/// A symmetric matrix of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymForm {
    n: usize,
    gram: Vec<Rat>,
    convention: Convention,
}

impl SymForm {
    pub fn new(n: usize, gram: Vec<Rat>, convention: Convention) -> Result<Self> {
        if gram.len() != n * n {
            return Err(Error::Parse(format!("expected {} entries, got {}", n * n, gram.len())));
        }
        for i in 0..n {
            for j in 0..i {
                if gram[i * n + j] != gram[j * n + i] {
                    return Err(Error::Parse("matrix is not symmetric".into()));
                }
            }
        }
        Ok(Self { n, gram, convention })
    }

    /// Half-Gram form from integer entries.
    pub fn from_ints(n: usize, entries: &[i64]) -> Result<Self> {
        Self::new(n, entries.iter().map(|&e| Rat::from_integer(e.into())).collect(), Convention::HalfGram)
    }

    pub fn diag(entries: &[Rat]) -> Self {
        let n = entries.len();
        let mut gram = vec![Rat::zero(); n * n];
        for (i, e) in entries.iter().enumerate() {
            gram[i * n + i] = e.clone();
        }
        Self { n, gram, convention: Convention::HalfGram }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// Matrix of `Q`, whichever convention the entries were given in.
    pub fn half_gram(&self) -> Vec<Rat> {
        match self.convention {
            Convention::HalfGram => self.gram.clone(),
            Convention::FullGram => {
                let half = Rat::new(BigInt::one(), BigInt::from(2));
                self.gram.iter().map(|e| e * &half).collect()
            }
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Rat {
        self.half_gram()[i * self.n + j].clone()
    }

    pub fn det(&self) -> Rat {
        det(&self.half_gram(), self.n)
    }

    /// `U S Uᵗ` for an `n×n` matrix `U`.
    pub fn conjugate(&self, u: &[Rat]) -> SymForm {
        let n = self.n;
        let s = self.half_gram();
        let mut us = vec![Rat::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Rat::zero();
                for k in 0..n {
                    acc += &u[i * n + k] * &s[k * n + j];
                }
                us[i * n + j] = acc;
            }
        }
        let mut out = vec![Rat::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Rat::zero();
                for k in 0..n {
                    acc += &us[i * n + k] * &u[j * n + k];
                }
                out[i * n + j] = acc;
            }
        }
        SymForm { n, gram: out, convention: Convention::HalfGram }
    }

    /// First entry (row-major) that is not p-integral.
    pub fn non_integral_entry(&self, ctx: &PrimeContext) -> Option<Rat> {
        self.half_gram().into_iter().find(|e| ctx.ordp(e).is_some_and(|v| v < 0))
    }

    /// Parses a JSON array of row-major `"num/den"` strings, as in `["1","1/2","1/2","1"]`.
    pub fn from_json(n: usize, s: &str) -> Result<Self> {
        let v: Vec<String> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let gram = v.iter().map(|e| parse_rat(e)).collect::<Result<Vec<_>>>()?;
        Self::new(n, gram, Convention::HalfGram)
    }

    pub fn to_json(&self) -> String {
        let v: Vec<String> = self.half_gram().iter().map(rat_string).collect();
        serde_json::to_string(&v).unwrap()
    }
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational '{s}'"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Always `num/den`, including integers.
pub fn rat_string(q: &Rat) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Serde adapter writing rationals as `"num/den"` strings.
pub mod rat_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Rat;

    pub fn serialize<S: Serializer>(q: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::rat_string(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Determinant by fraction-free expansion (n ≤ 6 here).
pub fn det(m: &[Rat], n: usize) -> Rat {
    let mut a = m.to_vec();
    let mut d = Rat::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !a[r * n + c].is_zero()) else {
            return Rat::zero();
        };
        if piv != c {
            for k in 0..n {
                a.swap(piv * n + k, c * n + k);
            }
            d = -d;
        }
        let pv = a[c * n + c].clone();
        d *= &pv;
        for r in c + 1..n {
            let f = &a[r * n + c] / &pv;
            if f.is_zero() {
                continue;
            }
            for k in c..n {
                let sub = &f * &a[c * n + k];
                a[r * n + k] -= sub;
            }
        }
    }
    d
}

/// `diag(ε_i p^{a_i})` with `ε_i ∈ {1, Δ}`, sorted by exponent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiagonalForm {
    ctx: PrimeContext,
    exps: Vec<i64>,
    units: Vec<UnitClass>,
}

impl DiagonalForm {
    /// Sorts and normalises the unit classes inside each Jordan block, so that
    /// equivalent inputs give identical values.
    pub fn new(ctx: PrimeContext, exps: Vec<i64>, units: Vec<UnitClass>) -> Self {
        assert_eq!(exps.len(), units.len());
        let mut pairs: Vec<(i64, UnitClass)> = exps.into_iter().zip(units).collect();
        pairs.sort();
        let mut i = 0;
        while i < pairs.len() {
            let mut j = i;
            let mut prod = UnitClass::One;
            while j < pairs.len() && pairs[j].0 == pairs[i].0 {
                prod = prod.times(pairs[j].1);
                j += 1;
            }
            for k in i..j {
                pairs[k].1 = if k + 1 == j { prod } else { UnitClass::One };
            }
            i = j;
        }
        Self {
            ctx,
            exps: pairs.iter().map(|x| x.0).collect(),
            units: pairs.iter().map(|x| x.1).collect(),
        }
    }

    /// Keeps the given order and unit classes (no block normalisation).
    pub fn raw(ctx: PrimeContext, exps: Vec<i64>, units: Vec<UnitClass>) -> Self {
        Self { ctx, exps, units }
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn rank(&self) -> usize {
        self.exps.len()
    }

    pub fn exps(&self) -> &[i64] {
        &self.exps
    }

    pub fn units(&self) -> &[UnitClass] {
        &self.units
    }

    pub fn entries(&self) -> Vec<Rat> {
        self.exps
            .iter()
            .zip(&self.units)
            .map(|(&a, &u)| Rat::from_integer(self.ctx.unit_value(u).into()) * self.ctx.p_pow(a))
            .collect()
    }

    pub fn to_symform(&self) -> SymForm {
        SymForm::diag(&self.entries())
    }

    /// Multiplies every entry by `p^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self::raw(self.ctx, self.exps.iter().map(|a| a + k).collect(), self.units.clone())
    }

    /// Parses `"e1*p^a1,e2*p^a2,..."`; units may be integers or `D`.
    pub fn parse(ctx: PrimeContext, s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for part in s.split(',') {
            entries.push(parse_entry(&ctx, part.trim())?);
        }
        if entries.is_empty() {
            return Err(Error::Parse("empty form".into()));
        }
        diagonalize(&ctx, &SymForm::diag(&entries))
    }

    /// Canonical string such as `1,1,p` or `D*p^3`.
    pub fn label(&self) -> String {
        self.exps
            .iter()
            .zip(&self.units)
            .map(|(&a, &u)| match (u, a) {
                (UnitClass::One, 0) => "1".to_string(),
                (UnitClass::One, 1) => "p".to_string(),
                (UnitClass::One, a) => format!("p^{a}"),
                (UnitClass::Delta, 0) => "D".to_string(),
                (UnitClass::Delta, 1) => "D*p".to_string(),
                (UnitClass::Delta, a) => format!("D*p^{a}"),
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// `χ(ε_i)`.
    pub fn chi(&self, i: usize) -> i8 {
        self.ctx.chi_class(self.units[i])
    }

    pub fn det_exp(&self) -> i64 {
        self.exps.iter().sum()
    }
}

impl fmt::Display for DiagonalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One literal entry such as `3`, `-1/2`, `D*p^2`.
pub fn parse_entry(ctx: &PrimeContext, s: &str) -> Result<Rat> {
    let bad = || Error::Parse(format!("bad form entry '{s}'"));
    let (unit, ppart) = match s.find('p') {
        Some(i) => (s[..i].trim_end_matches('*').trim(), Some(&s[i..])),
        None => (s, None),
    };
    let u = match unit {
        "" | "+" => Rat::one(),
        "-" => -Rat::one(),
        "D" => Rat::from_integer(ctx.delta().into()),
        "-D" => -Rat::from_integer(ctx.delta().into()),
        x => parse_rat(x).map_err(|_| bad())?,
    };
    let k = match ppart {
        None => 0,
        Some("p") => 1,
        Some(rest) => rest.strip_prefix("p^").ok_or_else(bad)?.parse::<i64>().map_err(|_| bad())?,
    };
    if u.is_zero() {
        return Err(bad());
    }
    Ok(u * ctx.p_pow(k))
}

/// GL_n(Z_p)-normal form of a p-integral nonsingular symmetric matrix.
pub fn diagonalize(ctx: &PrimeContext, t: &SymForm) -> Result<DiagonalForm> {
    if let Some(e) = t.non_integral_entry(ctx) {
        return Err(Error::NotPIntegral(e.to_string()));
    }
    let d = diagonal_entries(ctx, t)?;
    let mut exps = Vec::new();
    let mut units = Vec::new();
    for e in d {
        let (a, u) = ctx.split(&e);
        exps.push(a);
        units.push(ctx.unit_class(&u)?);
    }
    Ok(DiagonalForm::new(*ctx, exps, units))
}

/// Diagonal entries of a Jordan splitting over `Z_(p)` (not normalised).
pub fn diagonal_entries(ctx: &PrimeContext, t: &SymForm) -> Result<Vec<Rat>> {
    let mut n = t.rank();
    let mut m = t.half_gram();
    if t.det().is_zero() {
        return Err(Error::Singular);
    }
    let mut out = Vec::with_capacity(n);
    while n > 0 {
        // minimal-valuation entry; prefer the diagonal on ties
        let mut best: Option<(i64, usize, usize)> = None;
        for i in 0..n {
            for j in i..n {
                if let Some(v) = ctx.ordp(&m[i * n + j]) {
                    let better = match best {
                        None => true,
                        Some((bv, bi, bj)) => v < bv || (v == bv && i == j && bi != bj),
                    };
                    if better {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let (_, i, j) = best.ok_or(Error::Singular)?;
        if i != j {
            // e_i <- e_i + e_j makes the (i,i) entry of minimal valuation
            for k in 0..n {
                let add = m[j * n + k].clone();
                m[i * n + k] += add;
            }
            for k in 0..n {
                let add = m[k * n + j].clone();
                m[k * n + i] += add;
            }
        }
        // move pivot to 0
        if i != 0 {
            for k in 0..n {
                m.swap(i * n + k, k);
            }
            for k in 0..n {
                m.swap(k * n + i, k * n);
            }
        }
        let piv = m[0].clone();
        let mut next = vec![Rat::zero(); (n - 1) * (n - 1)];
        for r in 1..n {
            for c in 1..n {
                next[(r - 1) * (n - 1) + (c - 1)] = &m[r * n + c] - &m[r * n] * &m[c] / &piv;
            }
        }
        out.push(piv);
        m = next;
        n -= 1;
    }
    Ok(out)
}

/// Rank, determinant class and Hasse invariant at `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalInvariants {
    pub rank: usize,
    pub det_unit: UnitClass,
    pub det_exp: i64,
    pub hasse: i8,
}

pub fn local_invariants(d: &DiagonalForm) -> LocalInvariants {
    let ctx = d.ctx();
    let det_unit = d.units().iter().fold(UnitClass::One, |acc, &u| acc.times(u));
    LocalInvariants {
        rank: d.rank(),
        det_unit,
        det_exp: d.det_exp(),
        hasse: hasse_invariant(&d.entries(), Place::Finite(ctx.p())),
    }
}

/// `∏_{i<j} (d_i, d_j)_v`.
pub fn hasse_invariant(diag: &[Rat], place: Place) -> i8 {
    let mut h = 1;
    for i in 0..diag.len() {
        for j in i + 1..diag.len() {
            h *= hilbert_symbol(&diag[i], &diag[j], place).expect("nonzero diagonal");
        }
    }
    h
}

/// Whether the diagonal form `t` (rank n) embeds in the diagonal form `v`
/// (rank n or n + 1) over the completion at `place`.
pub fn represented_over(t: &[Rat], v: &[Rat], place: Place) -> Result<bool> {
    let (n, m) = (t.len(), v.len());
    if place == Place::Real {
        let pos = |d: &[Rat]| d.iter().filter(|x| x.is_positive()).count();
        let (tp, tn) = (pos(t), n - pos(t));
        let (vp, vn) = (pos(v), m - pos(v));
        return Ok(tp <= vp && tn <= vn);
    }
    let prod = |d: &[Rat]| d.iter().fold(Rat::one(), |a, b| a * b);
    match m as isize - n as isize {
        0 => Ok(same_square_class(&prod(t), &prod(v), place)
            && hasse_invariant(t, place) == hasse_invariant(v, place)),
        1 => {
            let mut ext = t.to_vec();
            ext.push(prod(v) / prod(t));
            Ok(hasse_invariant(&ext, place) == hasse_invariant(v, place))
        }
        _ => Err(Error::Unsupported("representability only in codimension 0 or 1".into())),
    }
}

fn same_square_class(a: &Rat, b: &Rat, place: Place) -> bool {
    let q = a / b;
    match place {
        Place::Real => q.is_positive(),
        Place::Finite(l) => {
            // q is a square iff (q, x) = 1 for all x; test against a generating set
            let mut gens = vec![Rat::from_integer((-1).into()), Rat::from_integer(l.into())];
            if l == 2 {
                gens.push(Rat::from_integer(2.into()));
                gens.push(Rat::from_integer(3.into()));
                gens.push(Rat::from_integer(5.into()));
            } else {
                let nr = crate::arith::smallest_nonresidue(l);
                gens.push(Rat::from_integer(nr.into()));
            }
            gens.iter().all(|g| hilbert_symbol(&q, g, place).unwrap() == 1)
        }
    }
}

/// The two quaternary spaces at `p`: `V_p = diag(1,-1,1,-Δ)` and `V'_p = diag(1,-1,p,-pΔ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadSpace {
    V,
    VPrime,
}

impl QuadSpace {
    pub fn diagonal(self, ctx: &PrimeContext) -> Vec<Rat> {
        let d = ctx.delta() as i64;
        let p = ctx.p() as i64;
        let v: [i64; 4] = match self {
            QuadSpace::V => [1, -1, 1, -d],
            QuadSpace::VPrime => [1, -1, p, -p * d],
        };
        v.iter().map(|&x| Rat::from_integer(x.into())).collect()
    }
}

/// Closed parity criterion for `V'_p ⊇ T`; `V_p` represents exactly the complement.
pub fn represents_locally(t: &DiagonalForm, space: QuadSpace) -> Result<bool> {
    if t.rank() != 3 {
        return Err(Error::RankMismatch { expected: 3, got: t.rank() });
    }
    let ctx = t.ctx();
    let a = t.exps();
    let chi_m1 = crate::arith::legendre(-1, ctx.p());
    let sgn = |base: i8, e: i64| if e.rem_euclid(2) == 1 { base } else { 1 };
    let s = a[0] + a[1] + a[2];
    let rhs = sgn(-1, s)
        * sgn(chi_m1, s + a[0] * a[1] + a[1] * a[2] + a[2] * a[0])
        * sgn(t.chi(0), a[1] + a[2])
        * sgn(t.chi(1), a[0] + a[2])
        * sgn(t.chi(2), a[0] + a[1]);
    let by_vprime = rhs == -1;
    Ok(match space {
        QuadSpace::VPrime => by_vprime,
        QuadSpace::V => !by_vprime,
    })
}

/// Places where the quaternion algebra `(-a1 a2, -a2 a3)` ramifies.
pub fn quaternion_invariant(a1: &Rat, a2: &Rat, a3: &Rat) -> Result<BTreeSet<Place>> {
    if a1.is_zero() || a2.is_zero() || a3.is_zero() {
        return Err(Error::ZeroArgument);
    }
    let x = -(a1 * a2);
    let y = -(a2 * a3);
    let mut places: BTreeSet<Place> = [Place::Real, Place::Finite(2)].into_iter().collect();
    for q in [a1, a2, a3] {
        for l in prime_factors(q.numer()).into_iter().chain(prime_factors(q.denom())) {
            places.insert(Place::Finite(l));
        }
    }
    let mut out = BTreeSet::new();
    for v in places {
        if hilbert_symbol(&x, &y, v)? == -1 {
            out.insert(v);
        }
    }
    Ok(out)
}

/// Integer-valued diagonal rational helper.
pub fn rats(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One as _;
    use UnitClass::{Delta, One};

    fn ctx3() -> PrimeContext {
        PrimeContext::new(3).unwrap()
    }

    #[test]
    fn identity_and_hyperbolic() {
        let c = ctx3();
        let d = diagonalize(&c, &SymForm::from_ints(3, &[1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap()).unwrap();
        assert_eq!(d.exps(), &[0, 0, 0]);
        assert_eq!(d.units(), &[One, One, One]);
        let h = diagonalize(&c, &SymForm::from_ints(2, &[0, 1, 1, 0]).unwrap()).unwrap();
        assert_eq!(h.exps(), &[0, 0]);
        let prod = h.units()[0].times(h.units()[1]);
        // det of the hyperbolic plane is -1
        assert_eq!(c.chi_class(prod), crate::arith::legendre(-1, 3));
    }

    #[test]
    fn full_gram_halves() {
        let c = ctx3();
        let f = SymForm::new(1, rats(&[2]), Convention::FullGram).unwrap();
        assert_eq!(diagonalize(&c, &f).unwrap().units(), &[One]);
        let g = SymForm::new(1, rats(&[4]), Convention::FullGram).unwrap();
        assert_eq!(diagonalize(&c, &g).unwrap().units(), &[Delta]);
    }

    #[test]
    fn rejects_non_integral() {
        let c = ctx3();
        let f = SymForm::diag(&[Rat::new(1.into(), 3.into())]);
        assert!(matches!(diagonalize(&c, &f), Err(Error::NotPIntegral(_))));
    }

    #[test]
    fn parse_and_label() {
        let c = ctx3();
        let d = DiagonalForm::parse(c, "1,1,p").unwrap();
        assert_eq!(d.exps(), &[0, 0, 1]);
        let e = DiagonalForm::parse(c, "D*p^3, p, 2").unwrap();
        assert_eq!(e.label(), "D,p,D*p^3");
        let f = DiagonalForm::parse(c, "D,D").unwrap();
        assert_eq!(f.units(), &[One, One]);
    }

    #[test]
    fn invariants_of_named_forms() {
        let c = ctx3();
        let s = diagonalize(&c, &SymForm::diag(&QuadSpace::V.diagonal(&c))).unwrap();
        let li = local_invariants(&s);
        assert_eq!((li.det_unit, li.det_exp), (Delta, 0));
        let sp = diagonalize(&c, &SymForm::diag(&QuadSpace::VPrime.diagonal(&c))).unwrap();
        let lp = local_invariants(&sp);
        assert_eq!((lp.det_unit, lp.det_exp), (Delta, 2));
        assert_ne!(li.hasse, lp.hasse);
    }

    #[test]
    fn criterion_examples() {
        let c = ctx3();
        let i3 = DiagonalForm::parse(c, "1,1,1").unwrap();
        assert!(represents_locally(&i3, QuadSpace::V).unwrap());
        assert!(!represents_locally(&i3, QuadSpace::VPrime).unwrap());
    }

    #[test]
    fn quaternion_examples() {
        let one = Rat::one();
        let q = quaternion_invariant(&one, &one, &one).unwrap();
        assert_eq!(q, [Place::Real, Place::Finite(2)].into_iter().collect());
        assert!(quaternion_invariant(&one, &-one.clone(), &one).unwrap().is_empty());
        let r = quaternion_invariant(&Rat::from_integer(3.into()), &one, &one).unwrap();
        // (-3, -1): ramified at 3 and inf
        assert_eq!(r, [Place::Real, Place::Finite(3)].into_iter().collect());
    }
}

#[cfg(test)]
mod cross_checks {
    use super::*;

    #[test]
    fn parity_criterion_matches_hasse_test() {
        for p in [3u64, 5, 7, 11] {
            let c = PrimeContext::new(p).unwrap();
            let vp = QuadSpace::VPrime.diagonal(&c);
            let v = QuadSpace::V.diagonal(&c);
            for a in 0..27i64 {
                let exps = vec![a % 3, (a / 3) % 3, a / 9];
                for u in 0..8 {
                    let units: Vec<UnitClass> =
                        (0..3).map(|i| if u >> i & 1 == 1 { UnitClass::Delta } else { UnitClass::One }).collect();
                    let t = DiagonalForm::raw(c, exps.clone(), units);
                    let e = t.entries();
                    let place = Place::Finite(p);
                    assert_eq!(
                        represents_locally(&t, QuadSpace::VPrime).unwrap(),
                        represented_over(&e, &vp, place).unwrap()
                    );
                    assert_eq!(
                        represents_locally(&t, QuadSpace::V).unwrap(),
                        represented_over(&e, &v, place).unwrap()
                    );
                }
            }
        }
    }
}

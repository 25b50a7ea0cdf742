//! Local representation densities `α_p(S, T)`.
//!
//! Two independent routes: exhaustive counting modulo `p^t` (the oracle) and
//! closed-form polynomials in `X = p^{-r}` for the ambient `S ⊥ H_{2r}`,
//! glued together by splitting off unimodular blocks.

mod oracle;
mod poly;

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_traits::One;

pub use oracle::{budget, count_at, count_naive, density_bruteforce, work_estimate, CountResult};
pub(crate) use poly::Laurent;
pub use poly::{derivative_at_one, DensityPolynomial};

use crate::arith::{inv_mod, legendre, lift_sqrt, mulmod, pow_u64, sqrt_mod_prime};
use crate::error::{Error, Result};
use crate::padic_core::{PrimeContext, UnitClass};
use crate::qform::{diagonal_entries, DiagonalForm, SymForm};
use crate::Rat;

/// The ambient forms with closed-form densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedForm {
    /// `diag(1, -1, 1, -Δ)`, the self-dual lattice of the inert space.
    S,
    /// The split form `diag(1, -1, 1, -1)`.
    H4,
    /// `diag(1, -1, p, -pΔ)`.
    SPrime,
    /// `diag(1, Δ, p, -pΔ)`, the norm form on the maximal order of the division algebra.
    STildePrime,
}

impl NamedForm {
    pub fn integer_entries(self, ctx: &PrimeContext) -> [i64; 4] {
        let (p, d) = (ctx.p() as i64, ctx.delta() as i64);
        match self {
            NamedForm::S => [1, -1, 1, -d],
            NamedForm::H4 => [1, -1, 1, -1],
            NamedForm::SPrime => [1, -1, p, -p * d],
            NamedForm::STildePrime => [1, d, p, -p * d],
        }
    }

    /// Diagonal form in the listed order.
    pub fn diagonal(self, ctx: &PrimeContext) -> DiagonalForm {
        diag_from_ints(ctx, &self.integer_entries(ctx))
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "S" => Ok(NamedForm::S),
            "H4" => Ok(NamedForm::H4),
            "S'" | "Sprime" => Ok(NamedForm::SPrime),
            "S~'" | "Stilde'" | "Stildeprime" => Ok(NamedForm::STildePrime),
            other => Err(Error::Parse(format!("unknown named form '{other}' (expected S, H4, S', S~')"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NamedForm::S => "S",
            NamedForm::H4 => "H4",
            NamedForm::SPrime => "S'",
            NamedForm::STildePrime => "S~'",
        }
    }
}

/// Diagonal form with the given nonzero integer entries, order kept.
pub fn diag_from_ints(ctx: &PrimeContext, entries: &[i64]) -> DiagonalForm {
    let mut exps = Vec::new();
    let mut units = Vec::new();
    for &e in entries {
        assert!(e != 0);
        let mut a = 0;
        let mut u = e;
        while u % ctx.p() as i64 == 0 {
            u /= ctx.p() as i64;
            a += 1;
        }
        exps.push(a);
        units.push(ctx.unit_class_int(u));
    }
    DiagonalForm::raw(*ctx, exps, units)
}

/// Rank and determinant character of the unimodular block.
fn unimodular_part(s: &DiagonalForm) -> (i64, i8) {
    let mut rank = 0;
    let mut chi = 1;
    for (i, &a) in s.exps().iter().enumerate() {
        if a == 0 {
            rank += 1;
            chi *= s.chi(i);
        }
    }
    (rank, chi)
}

fn is_unimodular(s: &DiagonalForm) -> bool {
    s.exps().iter().all(|&a| a == 0)
}

fn chi_m1(ctx: &PrimeContext) -> i8 {
    legendre(-1, ctx.p())
}

fn sign_pow(base: i8, e: i64) -> i64 {
    if e.rem_euclid(2) == 1 {
        base as i64
    } else {
        1
    }
}

/// Density of a unit of character `echi` in a unimodular form of rank `k0 + 2r`
/// and determinant character `dchi`.
fn unary_unit(ctx: &PrimeContext, k0: i64, dchi: i8, echi: i8) -> Laurent {
    let one = Laurent::term(ctx, 1, 0, 0);
    if k0 % 2 == 0 {
        let eta = sign_pow(chi_m1(ctx), k0 / 2) * dchi as i64;
        one.add(&Laurent::term(ctx, -eta, -k0 / 2, 1))
    } else {
        let s = sign_pow(chi_m1(ctx), (k0 - 1) / 2) * (dchi * echi) as i64;
        one.add(&Laurent::term(ctx, s, -(k0 - 1) / 2, 1))
    }
}

/// Number of nonzero isotropic vectors in a nondegenerate space of dimension `k0 + 2r` over `F_p`.
fn isotropic_vectors(ctx: &PrimeContext, k0: i64, dchi: i8) -> Laurent {
    if k0 % 2 == 0 {
        let eta = sign_pow(chi_m1(ctx), k0 / 2) * dchi as i64;
        let h = k0 / 2;
        Laurent::term(ctx, 1, h, -1)
            .add(&Laurent::term(ctx, -eta, 0, 0))
            .mul(&Laurent::term(ctx, 1, h - 1, -1).add(&Laurent::term(ctx, eta, 0, 0)))
    } else {
        Laurent::term(ctx, 1, k0 - 1, -2).add(&Laurent::term(ctx, -1, 0, 0))
    }
}

/// Density of `εp` in a unimodular form of rank `k0 + 2r`; every solution is primitive.
fn unary_p(ctx: &PrimeContext, k0: i64, dchi: i8) -> Laurent {
    isotropic_vectors(ctx, k0, dchi).mul(&Laurent::term(ctx, 1, 1 - k0, 2))
}

/// `α(S ⊥ H_{2r}, ε)`; only the unimodular block of `S` matters.
pub fn unary_polynomial(s: &DiagonalForm, eps: UnitClass) -> DensityPolynomial {
    let ctx = s.ctx();
    let (u, d) = unimodular_part(s);
    unary_unit(ctx, u, d, ctx.chi_class(eps)).into_poly("unary unit").expect("polynomial")
}

/// Closed unary densities of the named forms; constant for `S'` and `S~'`.
pub fn closed_form_unary(ctx: &PrimeContext, s: NamedForm, eps: UnitClass) -> DensityPolynomial {
    let a = unary_polynomial(&s.diagonal(ctx), eps);
    match s {
        NamedForm::S | NamedForm::H4 => a.with_tag(format!("unary {}", s.label())),
        _ => DensityPolynomial::constant(a.eval(&Rat::one()), format!("unary {}", s.label())),
    }
}

fn binary_closed(s: &DiagonalForm, t: &DiagonalForm) -> Result<DensityPolynomial> {
    let ctx = s.ctx();
    let (m0, d) = unimodular_part(s);
    let (a1, a2) = (t.exps()[0], t.exps()[1]);
    let (e1, e2) = (t.chi(0), t.chi(1));
    let l = match (a1, a2) {
        (0, 0) => unary_unit(ctx, m0, d, e1).mul(&unary_unit(ctx, m0 - 1, d * e1, e2)),
        (0, 1) => unary_unit(ctx, m0, d, e1).mul(&unary_p(ctx, m0 - 1, d * e1)),
        (1, 1) => {
            // primitive part: ordered bases of totally isotropic planes mod p;
            // x^⊥/⟨x⟩ has determinant -det S
            let planes = isotropic_vectors(ctx, m0, d)
                .mul(&isotropic_vectors(ctx, m0 - 2, d * chi_m1(ctx)))
                .mul(&Laurent::term(ctx, 1, 1, 0));
            let prim = planes.mul(&Laurent::term(ctx, 1, 3 - 2 * m0, 4));
            // imprimitive part: the isotropic lines of the residue form give hyperbolic overlattices
            let lines = 1 + (chi_m1(ctx) * e1 * e2) as i64;
            let hyp = unary_unit(ctx, m0, d, 1).mul(&unary_unit(ctx, m0 - 1, d, chi_m1(ctx)));
            prim.add(&hyp.mul(&Laurent::term(ctx, lines, 3 - m0, 2)))
        }
        _ => return Err(Error::Unsupported("binary closed form needs exponents at most 1".into())),
    };
    l.into_poly("binary unimodular")
}

/// Kitaoka's polynomial for `H_{2r+4}` and a ternary form with a unit first entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kitaoka {
    pub sigma: i8,
    pub chi_t: i8,
    /// `α(H_{2r+4}, T) / ((1 - p^{-2}X)(1 - p^{-2}X²))`.
    pub quotient: DensityPolynomial,
    /// `α(H_{2r+4}, T)` itself.
    pub product: DensityPolynomial,
}

/// The leading unit of `t` plays the role of the split-off unimodular entry.
pub fn kitaoka_h4(t: &DiagonalForm) -> Result<Kitaoka> {
    if t.rank() != 3 {
        return Err(Error::RankMismatch { expected: 3, got: t.rank() });
    }
    let ctx = t.ctx();
    let (a1, a2, a3) = (t.exps()[0], t.exps()[1], t.exps()[2]);
    if a1 != 0 {
        return Err(Error::WrongCase(format!("first exponent must be 0, got {a1}")));
    }
    if a2 < 0 || a3 < a2 {
        return Err(Error::Domain("exponents must satisfy 0 <= a2 <= a3".into()));
    }
    let (eta, e2, e3) = (t.chi(0), t.chi(1), t.chi(2));
    let cm1 = chi_m1(ctx);
    let sigma = cm1 * eta * e2;
    let chi_t = if a2 % 2 == 0 {
        if a3 % 2 == 0 {
            1
        } else {
            sigma
        }
    } else if a3 % 2 == 0 {
        cm1 * eta * e3
    } else {
        cm1 * e2 * e3
    };
    let deg = (a2 + a3) as usize;
    let mut c = vec![Rat::from_integer(0.into()); deg + 1];
    let pl = |l: i64| ctx.p_pow(l);
    let upper = if a2 % 2 == 0 { a2 / 2 - 1 } else { (a2 - 1) / 2 };
    for l in 0..=upper {
        c[(2 * l) as usize] += pl(l);
        c[(a2 + a3 - 2 * l) as usize] += pl(l) * Rat::from_integer(chi_t.into());
    }
    if a2 % 2 == 0 {
        let mut s = 1i64;
        for j in 0..=(a3 - a2) {
            c[(a2 + j) as usize] += pl(a2 / 2) * Rat::from_integer(s.into());
            s *= sigma as i64;
        }
    }
    let quotient = DensityPolynomial::new(c, "kitaoka quotient");
    let p2 = ctx.p_pow(-2);
    let f1 = DensityPolynomial::new(vec![Rat::one(), -p2.clone()], "");
    let f2 = DensityPolynomial::new(vec![Rat::one(), Rat::from_integer(0.into()), -p2], "");
    let product = f1.mul(&f2).mul(&quotient).with_tag("kitaoka H4");
    Ok(Kitaoka { sigma, chi_t, quotient, product })
}

/// `A_{S,T}(X)` for the inert ambient `S` or the split ambient `H4`, `T` with a unit first entry.
///
/// For `S` this goes through the unimodular splitting
/// `A_{S,T} = A_{S,ε} / A_{H4,εΔ} · A_{H4,T_{εΔ}}`.
pub fn a_polynomial(ambient: NamedForm, t: &DiagonalForm) -> Result<DensityPolynomial> {
    let ctx = t.ctx();
    match ambient {
        NamedForm::H4 => Ok(kitaoka_h4(t)?.product.with_tag("A_{H4,T}")),
        NamedForm::S => {
            if t.rank() != 3 || t.exps()[0] != 0 {
                return Err(Error::WrongCase("need a ternary form with a unit first entry".into()));
            }
            let e1 = t.units()[0];
            let e1d = e1.times(UnitClass::Delta);
            let mut units = t.units().to_vec();
            units[0] = e1d;
            let shifted = DiagonalForm::raw(*ctx, t.exps().to_vec(), units);
            let num = closed_form_unary(ctx, NamedForm::S, e1).mul(&kitaoka_h4(&shifted)?.product);
            let den = closed_form_unary(ctx, NamedForm::H4, e1d);
            Ok(num.div_exact(&den)?.with_tag("A_{S,T} by unimodular splitting"))
        }
        _ => Err(Error::Unsupported(format!("no polynomial family for {}", ambient.label()))),
    }
}

type CacheKey = (DiagonalForm, DiagonalForm);

fn cache() -> &'static RwLock<HashMap<CacheKey, DensityPolynomial>> {
    static C: OnceLock<RwLock<HashMap<CacheKey, DensityPolynomial>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

/// Closed-form `A_{S,T}(X)` where one is available:
/// unary targets, binary targets with exponents ≤ 1 in a unimodular ambient,
/// and ternary targets with a unit entry in `S` or `H4`.
pub fn closed_form(s: &DiagonalForm, t: &DiagonalForm) -> Result<DensityPolynomial> {
    let key = (s.clone(), t.clone());
    if let Some(hit) = cache().read().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let ctx = s.ctx();
    let unsupported = || Error::Unsupported(format!("no closed form for S = {s}, T = {t}"));
    let poly = match t.rank() {
        1 => match t.exps()[0] {
            0 => unary_polynomial(s, t.units()[0]),
            1 if is_unimodular(s) => {
                let (u, d) = unimodular_part(s);
                unary_p(ctx, u, d).into_poly("unary p")?
            }
            _ => return Err(unsupported()),
        },
        2 if is_unimodular(s) && t.exps().iter().all(|&a| (0..=1).contains(&a)) => binary_closed(s, t)?,
        3 if t.exps()[0] == 0 => {
            let norm = DiagonalForm::new(*ctx, s.exps().to_vec(), s.units().to_vec());
            let same = |f: NamedForm| {
                let d = f.diagonal(ctx);
                DiagonalForm::new(*ctx, d.exps().to_vec(), d.units().to_vec()) == norm
            };
            if same(NamedForm::S) {
                a_polynomial(NamedForm::S, t)?
            } else if same(NamedForm::H4) {
                a_polynomial(NamedForm::H4, t)?
            } else {
                return Err(unsupported());
            }
        }
        _ => return Err(unsupported()),
    };
    cache().write().unwrap().insert(key, poly.clone());
    Ok(poly)
}

/// One unimodular splitting step `α(N ⊥ M, N ⊥ L) = α(N ⊥ M, N) · α(M, L)` with `N = ⟨ε⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionStep {
    pub ambient: DiagonalForm,
    pub target: UnitClass,
    /// Vector `x` with `S[x] ≡ ε (mod p^k)`, in the coordinates of `ambient`.
    pub witness: Vec<u64>,
    pub witness_precision: u32,
    pub complement: DiagonalForm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub steps: Vec<ReductionStep>,
    pub residual_s: DiagonalForm,
    pub residual_t: Option<DiagonalForm>,
}

impl Reduction {
    /// Human-readable product expression.
    pub fn labels(&self) -> Vec<String> {
        let mut v: Vec<String> =
            self.steps.iter().map(|s| format!("alpha({} ; {})", s.ambient, s.target.label())).collect();
        if let Some(t) = &self.residual_t {
            v.push(format!("alpha({} ; {})", self.residual_s, t));
        }
        v
    }
}

/// Largest `k` with `p^k < 2^62`.
fn witness_precision(p: u64) -> u32 {
    let mut k = 0;
    let mut v: u64 = 1;
    while let Some(n) = v.checked_mul(p).filter(|&n| n < 1 << 62) {
        v = n;
        k += 1;
    }
    k
}

/// Splits off every unit entry of `t`, finding each embedding by Hensel lifting.
pub fn reduce(s: &DiagonalForm, t: &DiagonalForm) -> Result<Reduction> {
    let ctx = *s.ctx();
    let units_idx: Vec<usize> = (0..t.rank()).filter(|&i| t.exps()[i] == 0).collect();
    if units_idx.is_empty() {
        return Err(Error::NotReducible);
    }
    if t.rank() > s.rank() {
        return Err(Error::RankMismatch { expected: s.rank(), got: t.rank() });
    }
    let mut cur = s.clone();
    let mut steps = Vec::new();
    for &i in &units_idx {
        let eps = t.units()[i];
        let (witness, k, complement) = split_unit(&ctx, &cur, eps)?;
        steps.push(ReductionStep {
            ambient: cur.clone(),
            target: eps,
            witness,
            witness_precision: k,
            complement: complement.clone(),
        });
        cur = complement;
    }
    let rest: Vec<usize> = (0..t.rank()).filter(|&i| t.exps()[i] != 0).collect();
    let residual_t = (!rest.is_empty()).then(|| {
        DiagonalForm::raw(ctx, rest.iter().map(|&i| t.exps()[i]).collect(), rest.iter().map(|&i| t.units()[i]).collect())
    });
    Ok(Reduction { steps, residual_s: cur, residual_t })
}

/// Finds `x` with `S[x] = ε` in the unimodular block and returns the complement of `x`.
fn split_unit(ctx: &PrimeContext, s: &DiagonalForm, eps: UnitClass) -> Result<(Vec<u64>, u32, DiagonalForm)> {
    let p = ctx.p();
    let k = witness_precision(p);
    let pk = pow_u64(p, k);
    let uni: Vec<usize> = (0..s.rank()).filter(|&i| s.exps()[i] == 0).collect();
    let coef: Vec<u64> =
        uni.iter().map(|&i| ctx.unit_value(s.units()[i]).rem_euclid(pk as i64) as u64).collect();
    let e = ctx.unit_value(eps) as u64 % pk;
    // residue solution, searching vectors with at most two nonzero coordinates
    let mut sol: Option<Vec<u64>> = None;
    'outer: for a in 0..uni.len() {
        for b in a..uni.len() {
            for y in 0..p {
                // coef[a]·x² ≡ e − coef[b]·y² (mod p), b ≠ a; or b == a with y unused
                let rhs = if b == a {
                    if y > 0 {
                        break;
                    }
                    e % p
                } else {
                    (e + p * p - coef[b] % p * (y * y % p) % p) % p
                };
                let r = rhs * inv_mod(coef[a] % p, p).unwrap() % p;
                if r == 0 {
                    continue;
                }
                if let Some(x) = sqrt_mod_prime(r, p) {
                    let mut v = vec![0u64; uni.len()];
                    v[a] = x;
                    if b != a {
                        v[b] = y;
                    }
                    sol = Some(v);
                    break 'outer;
                }
            }
        }
    }
    let mut x = sol.ok_or(Error::NotRepresentable)?;
    // Hensel lift in the first coordinate that is a unit
    let a = x.iter().position(|&v| v % p != 0).unwrap();
    let mut rest = 0u64;
    for (j, &xj) in x.iter().enumerate() {
        if j != a {
            rest = (rest + mulmod(coef[j], mulmod(xj, xj, pk), pk)) % pk;
        }
    }
    let rhs = mulmod((e + pk - rest) % pk, inv_mod(coef[a], pk).unwrap(), pk);
    x[a] = lift_sqrt(rhs, x[a], p, k).ok_or(Error::NotRepresentable)?;
    // complement basis π(e_j) = e_j - (B(e_j, x)/ε) x for j ≠ a
    let einv = inv_mod(e, pk).unwrap();
    let others: Vec<usize> = (0..uni.len()).filter(|&j| j != a).collect();
    let nn = others.len();
    let mut gram = vec![Rat::from_integer(0.into()); nn * nn];
    for (r, &j) in others.iter().enumerate() {
        for (c, &l) in others.iter().enumerate() {
            let cross = mulmod(mulmod(mulmod(coef[j], x[j], pk), mulmod(coef[l], x[l], pk), pk), einv, pk);
            let diag = if j == l { coef[j] } else { 0 };
            gram[r * nn + c] = Rat::from_integer(((diag + pk - cross) % pk).into());
        }
    }
    let mut exps = vec![0i64; nn];
    let mut units = Vec::with_capacity(nn);
    if nn > 0 {
        for d in diagonal_entries(ctx, &SymForm::new(nn, gram, crate::qform::Convention::HalfGram)?)? {
            units.push(ctx.unit_class(&d)?);
        }
    }
    for i in 0..s.rank() {
        if s.exps()[i] != 0 {
            exps.push(s.exps()[i]);
            units.push(s.units()[i]);
        }
    }
    let complement = DiagonalForm::raw(*ctx, exps, units);
    // the complement's determinant class is forced: det(S)/ε
    let det_chi = |f: &DiagonalForm| (0..f.rank()).map(|i| f.chi(i)).product::<i8>();
    debug_assert_eq!(det_chi(&complement) * ctx.chi_class(eps), det_chi(s));
    let mut full = vec![0u64; s.rank()];
    for (j, &i) in uni.iter().enumerate() {
        full[i] = x[j];
    }
    Ok((full, k, complement))
}

/// Value of a reduction: closed unary factors at `X = 1` times the residual density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedValue {
    pub value: Rat,
    pub factors: Vec<(String, Rat)>,
    /// `closed` or `bruteforce`.
    pub residual_method: &'static str,
    pub residual_count: Option<CountResult>,
}

/// Evaluates a reduction; the residual uses a closed form when one exists and
/// otherwise the counting oracle at precision `t`.
pub fn evaluate_reduction(red: &Reduction, t: u32) -> Result<ReducedValue> {
    let mut factors = Vec::new();
    let mut value = Rat::one();
    for st in &red.steps {
        let v = unary_polynomial(&st.ambient, st.target).eval(&Rat::one());
        value *= &v;
        factors.push((format!("alpha({} ; {})", st.ambient, st.target.label()), v));
    }
    let (mut method, mut count) = ("closed", None);
    if let Some(rt) = &red.residual_t {
        let v = match closed_form(&red.residual_s, rt) {
            Ok(poly) => poly.eval(&Rat::one()),
            Err(Error::Unsupported(_)) => {
                let c = density_bruteforce(red.residual_s.ctx(), &red.residual_s.to_symform(), &rt.to_symform(), t)?;
                method = "bruteforce";
                let d = c.density.clone();
                count = Some(c);
                d
            }
            Err(e) => return Err(e),
        };
        value *= &v;
        factors.push((format!("alpha({} ; {})", red.residual_s, rt), v));
    }
    Ok(ReducedValue { value, factors, residual_method: method, residual_count: count })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64) -> PrimeContext {
        PrimeContext::new(p).unwrap()
    }

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(a.into(), b.into())
    }

    #[test]
    fn unary_named_forms() {
        let c = ctx(3);
        for e in [UnitClass::One, UnitClass::Delta] {
            assert_eq!(closed_form_unary(&c, NamedForm::S, e).coeffs(), &[r(1, 1), r(1, 9)]);
            assert_eq!(closed_form_unary(&c, NamedForm::H4, e).coeffs(), &[r(1, 1), r(-1, 9)]);
            assert_eq!(closed_form_unary(&c, NamedForm::SPrime, e).coeffs(), &[r(2, 3)]);
            // chi(-1) = -1 at p = 3
            assert_eq!(closed_form_unary(&c, NamedForm::STildePrime, e).coeffs(), &[r(2, 3)]);
        }
        let c5 = ctx(5);
        assert_eq!(closed_form_unary(&c5, NamedForm::STildePrime, UnitClass::One).coeffs(), &[r(6, 5)]);
    }

    #[test]
    fn x_squared_equals_one() {
        let c = ctx(3);
        let one = SymForm::diag(&[r(1, 1)]);
        let res = count_at(&c, &one, &one, 3).unwrap();
        assert_eq!(res.count, 2);
    }

    #[test]
    fn kitaoka_examples() {
        let c = ctx(3);
        // a2 = 0, a3 = 1 with sigma = -1
        let eta = UnitClass::One;
        let e2 = UnitClass::from_chi(-legendre(-1, 3));
        let t = DiagonalForm::raw(c, vec![0, 0, 1], vec![eta, e2, UnitClass::One]);
        let k = kitaoka_h4(&t).unwrap();
        assert_eq!(k.sigma, -1);
        assert_eq!(k.quotient.eval(&Rat::one()), r(0, 1));
        assert_eq!(derivative_at_one(&k.quotient), r(-1, 1));
        // a2 = a3 = 1 with chi(T) = -1: derivative of the bracket is -2
        let e3 = UnitClass::from_chi(-legendre(-1, 3));
        let t = DiagonalForm::raw(c, vec![0, 1, 1], vec![eta, UnitClass::One, e3]);
        let k = kitaoka_h4(&t).unwrap();
        assert_eq!(k.chi_t, -1);
        assert_eq!(derivative_at_one(&k.quotient), r(-2, 1));
        assert!(kitaoka_h4(&DiagonalForm::raw(c, vec![1, 1, 1], vec![eta; 3])).is_err());
    }

    #[test]
    fn reduction_complements() {
        let c = ctx(3);
        let s = NamedForm::S.diagonal(&c);
        let t = DiagonalForm::raw(c, vec![0, 1, 1], vec![UnitClass::One; 3]);
        let red = reduce(&s, &t).unwrap();
        assert_eq!(red.steps.len(), 1);
        assert_eq!(red.residual_s.rank(), 3);
        let st = &red.steps[0];
        let pk = pow_u64(3, st.witness_precision);
        let ints = NamedForm::S.integer_entries(&c);
        let val = st
            .witness
            .iter()
            .zip(ints)
            .fold(0i128, |acc, (&x, si)| (acc + si as i128 * (x as i128 * x as i128 % pk as i128)).rem_euclid(pk as i128));
        assert_eq!(val, 1);
        let all_high = DiagonalForm::raw(c, vec![1, 1, 1], vec![UnitClass::One; 3]);
        assert!(matches!(reduce(&s, &all_high), Err(Error::NotReducible)));
    }
}

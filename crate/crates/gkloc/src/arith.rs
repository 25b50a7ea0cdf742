//! Word-sized modular arithmetic used by the hot loops.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

#[inline]
pub fn submod(a: u64, b: u64, m: u64) -> u64 {
    let (a, b) = (a % m, b % m);
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

#[inline]
pub fn negmod(a: u64, m: u64) -> u64 {
    if a.is_multiple_of(m) {
        0
    } else {
        m - a % m
    }
}

pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m as i128) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Legendre symbol of `a` modulo the odd prime `p` (0 when `p | a`).
pub fn legendre(a: i128, p: u64) -> i8 {
    let r = a.rem_euclid(p as i128) as u64;
    if r == 0 {
        return 0;
    }
    if powmod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

pub fn legendre_big(a: &BigInt, p: u64) -> i8 {
    let r = a.mod_floor(&BigInt::from(p)).to_i128().unwrap();
    legendre(r, p)
}

/// Smallest positive quadratic non-residue mod `p`.
pub fn smallest_nonresidue(p: u64) -> u64 {
    (2..p).find(|&d| legendre(d as i128, p) == -1).unwrap_or(0)
}

/// p-adic valuation of a nonzero machine integer.
pub fn vp(mut x: u128, p: u64) -> u32 {
    debug_assert!(x != 0);
    let p = p as u128;
    let mut v = 0;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

/// p-adic valuation of a nonzero big integer together with its p-free part.
pub fn vp_big(x: &BigInt, p: u64) -> (i64, BigInt) {
    debug_assert!(!x.is_zero());
    let pb = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        x = q;
        v += 1;
    }
    (v, x)
}

/// Residue of a rational `num/den` modulo `m`, with `den` invertible mod `m`.
pub fn rat_mod(num: &BigInt, den: &BigInt, m: u64) -> Option<u64> {
    let mb = BigInt::from(m);
    let n = num.mod_floor(&mb).to_u64().unwrap();
    let d = den.mod_floor(&mb).to_u64().unwrap();
    inv_mod(d, m).map(|di| mulmod(n, di, m))
}

pub fn pow_u64(p: u64, k: u32) -> u64 {
    p.checked_pow(k).expect("modulus overflow")
}

/// Square root of `a` modulo the odd prime `p` (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if powmod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let (mut q, mut s) = (p - 1, 0u32);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = smallest_nonresidue(p);
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mulmod(tt, tt, p);
            i += 1;
        }
        let b = powmod(c, 1u64 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    Some(r.min(p - r))
}

/// Square root of the unit `a` modulo `p^k`, lifting the smaller root mod `p`.
pub fn sqrt_unit_mod_pk(a: u64, p: u64, k: u32) -> Option<u64> {
    let r0 = sqrt_mod_prime(a % p, p)?;
    if r0 == 0 {
        return None;
    }
    lift_sqrt(a, r0, p, k)
}

/// Hensel-lift a root `r0` of `x^2 = a` mod `p` to mod `p^k`.
pub fn lift_sqrt(a: u64, r0: u64, p: u64, k: u32) -> Option<u64> {
    let mut r = r0 % p;
    let mut pk = p;
    for _ in 1..k {
        let pk1 = pk * p;
        // r <- r - (r^2 - a)/(2r) mod p^{k+1}
        let f = submod(mulmod(r, r, pk1), a % pk1, pk1);
        let inv2r = inv_mod(mulmod(2, r, pk1), pk1)?;
        r = submod(r, mulmod(f, inv2r, pk1), pk1);
        pk = pk1;
    }
    Some(r % pk)
}

pub fn big_abs_u64(x: &BigInt) -> Option<u64> {
    x.abs().to_u64()
}

//! Exhaustive solution counts of `S[x] ≡ T (mod p^t)`.

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::arith::{inv_mod, pow_u64, rat_mod, vp};
use crate::error::{Error, Result};
use crate::padic_core::PrimeContext;
use crate::qform::{diagonal_entries, SymForm};
use crate::Rat;

/// Work budget (elementary steps) for one count; overridable by `GKLOC_BUDGET`.
pub fn budget() -> u128 {
    std::env::var("GKLOC_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(3_000_000_000)
}

/// Outcome of a counting run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountResult {
    pub count: u128,
    /// `t(n(n+1)/2 - mn)`.
    pub scaling_exponent: i64,
    pub density: Rat,
    pub t: u32,
    /// The approximant at `t + 1` was computed and agrees.
    pub stabilized: bool,
    /// Approximant at `t + 1` if it fit in the budget.
    pub next: Option<Rat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Convolution,
    Columns,
}

struct Problem {
    p: u64,
    t: u32,
    q: u64,
    m: usize,
    n: usize,
    s: Vec<u64>,
    tm: Vec<u64>,
}

fn powq(q: u64, e: i64) -> u128 {
    if e < 0 {
        return 1;
    }
    (q as u128).saturating_pow(e as u32)
}

fn cost(method: Method, q: u64, m: usize, n: usize) -> u128 {
    let (m, n) = (m as i64, n as i64);
    match method {
        Method::Convolution => (m as u128).saturating_mul(powq(q, n * (n + 1) / 2 + n)),
        Method::Columns => (0..n)
            .map(|k| powq(q, (k + 1) * m - k * (k + 3) / 2))
            .fold(0u128, |a, b| a.saturating_add(b)),
    }
}

fn choose(q: u64, m: usize, n: usize) -> (Method, u128) {
    let c = cost(Method::Columns, q, m, n);
    let d = cost(Method::Convolution, q, m, n);
    if d <= c {
        (Method::Convolution, d)
    } else {
        (Method::Columns, c)
    }
}

/// Estimated work for counting at precision `t`.
pub fn work_estimate(p: u64, m: usize, n: usize, t: u32) -> u128 {
    match p.checked_pow(t) {
        Some(q) if q < 1 << 31 => choose(q, m, n).1,
        _ => u128::MAX,
    }
}

/// Brute-force density approximant, recomputed at `t + 1` when affordable.
pub fn density_bruteforce(ctx: &PrimeContext, s: &SymForm, t_form: &SymForm, t: u32) -> Result<CountResult> {
    let first = count_at(ctx, s, t_form, t)?;
    let next = match count_at(ctx, s, t_form, t + 1) {
        Ok(r) => Some(r.density),
        Err(Error::Budget { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(CountResult { stabilized: next.as_ref() == Some(&first.density), next, ..first })
}

/// Single count at precision `t`, without the stabilization check.
pub fn count_at(ctx: &PrimeContext, s: &SymForm, t_form: &SymForm, t: u32) -> Result<CountResult> {
    let (m, n) = (s.rank(), t_form.rank());
    if n == 0 || n > 3 || m < n || m > 8 {
        return Err(Error::Unsupported(format!("brute force needs 1 <= n <= 3, n <= m <= 8 (got m={m}, n={n})")));
    }
    if t == 0 {
        return Err(Error::Domain("precision t must be positive".into()));
    }
    for f in [s, t_form] {
        if let Some(e) = f.non_integral_entry(ctx) {
            return Err(Error::NotPIntegral(e.to_string()));
        }
    }
    let p = ctx.p();
    let q = p.checked_pow(t).filter(|&q| q < 1 << 31).ok_or(Error::Budget { needed: u128::MAX, budget: budget() })?;
    let (method, needed) = choose(q, m, n);
    if needed > budget() {
        return Err(Error::Budget { needed, budget: budget() });
    }
    let to_mod = |x: &Rat| rat_mod(x.numer(), x.denom(), q).expect("p-integral entry");
    let s_diag = diagonal_entries(ctx, s)?;
    let tm: Vec<u64> = t_form.half_gram().iter().map(to_mod).collect();
    let pr = Problem { p, t, q, m, n, s: s_diag.iter().map(to_mod).collect(), tm };
    let count = match method {
        Method::Convolution => count_convolution(&pr),
        Method::Columns => count_columns(&pr),
    };
    let scaling_exponent = t as i64 * ((n * (n + 1) / 2) as i64 - (m * n) as i64);
    let density = Rat::from_integer(BigInt::from(count)) * ctx.p_pow(scaling_exponent);
    Ok(CountResult { count, scaling_exponent, density, t, stabilized: false, next: None })
}

/// Distribution of `S[x]` over `Sym_n(Z/q)` built one row of `x` at a time.
fn count_convolution(pr: &Problem) -> u128 {
    let (q, n) = (pr.q, pr.n);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let dim = pairs.len();
    let size = (q as usize).pow(dim as u32);
    let encode = |d: &[u64]| d.iter().rev().fold(0usize, |acc, &x| acc * q as usize + x as usize);
    let decode = |mut c: usize| {
        let mut d = vec![0u64; dim];
        for x in d.iter_mut() {
            *x = (c % q as usize) as u64;
            c /= q as usize;
        }
        d
    };
    let mut state = vec![0u128; size];
    state[0] = 1;
    for &si in &pr.s {
        let mut dist = vec![0u128; size];
        let mut v = vec![0u64; n];
        loop {
            let d: Vec<u64> = pairs.iter().map(|&(i, j)| si * (v[i] * v[j] % q) % q).collect();
            dist[encode(&d)] += 1;
            let mut k = 0;
            loop {
                if k == n {
                    break;
                }
                v[k] += 1;
                if v[k] < q {
                    break;
                }
                v[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
        let support: Vec<(Vec<u64>, u128)> =
            dist.iter().enumerate().filter(|(_, &c)| c > 0).map(|(b, &c)| (decode(b), c)).collect();
        state = (0..size)
            .into_par_iter()
            .map(|c| {
                let cd = decode(c);
                let mut acc = 0u128;
                let mut diff = vec![0u64; dim];
                for (bd, cnt) in &support {
                    for k in 0..dim {
                        diff[k] = (cd[k] + q - bd[k]) % q;
                    }
                    let o = state[encode(&diff)];
                    if o != 0 {
                        acc += o * cnt;
                    }
                }
                acc
            })
            .collect();
    }
    let target: Vec<u64> = pairs.iter().map(|&(i, j)| pr.tm[i * n + j]).collect();
    state[encode(&target)]
}

fn quad(pr: &Problem, x: &[u64]) -> u64 {
    let q = pr.q;
    x.iter().zip(&pr.s).fold(0, |acc, (&xi, &si)| (acc + si * (xi * xi % q)) % q)
}

/// Column-by-column enumeration: each new column solves its linear
/// constraints by Smith normal form and only the solution coset is scanned.
fn count_columns(pr: &Problem) -> u128 {
    let (q, m) = (pr.q, pr.m);
    let total = (q as usize).pow(m as u32);
    let t00 = pr.tm[0];
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0u64; m];
            for xi in x.iter_mut() {
                *xi = (idx % q as usize) as u64;
                idx /= q as usize;
            }
            if quad(pr, &x) != t00 {
                return 0;
            }
            if pr.n == 1 {
                return 1;
            }
            let mut cols = vec![x];
            extend(pr, &mut cols)
        })
        .sum()
}

fn extend(pr: &Problem, cols: &mut Vec<Vec<u64>>) -> u128 {
    let (q, m, n) = (pr.q, pr.m, pr.n);
    let k = cols.len();
    let rows: Vec<Vec<u64>> = cols.iter().map(|x| (0..m).map(|i| pr.s[i] * x[i] % q).collect()).collect();
    let b: Vec<u64> = (0..k).map(|j| pr.tm[j * n + k]).collect();
    let Some(coset) = solve_affine(pr, rows, b) else {
        return 0;
    };
    let target = pr.tm[k * n + k];
    let g = coset.gens.len();
    let mut digits = vec![0u64; g];
    let mut x = coset.base;
    let mut total = 0u128;
    loop {
        if quad(pr, &x) == target {
            if k + 1 == n {
                total += 1;
            } else {
                cols.push(x.clone());
                total += extend(pr, cols);
                cols.pop();
            }
        }
        let mut j = 0;
        loop {
            if j == g {
                return total;
            }
            digits[j] += 1;
            for (xi, gi) in x.iter_mut().zip(&coset.gens[j]) {
                *xi = (*xi + gi) % q;
            }
            if digits[j] < coset.counts[j] {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
    }
}

struct Coset {
    base: Vec<u64>,
    gens: Vec<Vec<u64>>,
    counts: Vec<u64>,
}

/// Solution set of `A x ≡ b (mod p^t)` as `base + Σ c_j gens_j`, `0 ≤ c_j < counts_j`.
fn solve_affine(pr: &Problem, mut a: Vec<Vec<u64>>, mut b: Vec<u64>) -> Option<Coset> {
    let (p, t, q, m) = (pr.p, pr.t, pr.q, pr.m);
    let k = a.len();
    // column operations accumulate into c (row-major m×m), so x = c·y
    let mut c = vec![vec![0u64; m]; m];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = 1;
    }
    let mut exps = Vec::new();
    for i in 0..k {
        let mut best: Option<(u32, usize, usize)> = None;
        for (r, row) in a.iter().enumerate().skip(i) {
            for (col, &v) in row.iter().enumerate().skip(i) {
                if v != 0 {
                    let e = vp(v as u128, p);
                    if best.is_none_or(|(be, _, _)| e < be) {
                        best = Some((e, r, col));
                    }
                }
            }
        }
        let Some((e, r, col)) = best else { break };
        a.swap(i, r);
        b.swap(i, r);
        if col != i {
            for row in a.iter_mut() {
                row.swap(i, col);
            }
            for row in c.iter_mut() {
                row.swap(i, col);
            }
        }
        let pe = pow_u64(p, e);
        let uinv = inv_mod(a[i][i] / pe, q).expect("unit part");
        for v in a[i].iter_mut() {
            *v = *v * uinv % q;
        }
        b[i] = b[i] * uinv % q;
        for r in i + 1..k {
            let f = a[r][i] / pe;
            if f == 0 {
                continue;
            }
            for col in 0..m {
                a[r][col] = (a[r][col] + q - f * a[i][col] % q) % q;
            }
            b[r] = (b[r] + q - f * b[i] % q) % q;
        }
        for col in i + 1..m {
            let f = a[i][col] / pe;
            if f == 0 {
                continue;
            }
            for row in a.iter_mut().skip(i) {
                row[col] = (row[col] + q - f * row[i] % q) % q;
            }
            for row in c.iter_mut() {
                row[col] = (row[col] + q - f * row[i] % q) % q;
            }
        }
        exps.push(e);
    }
    let rank = exps.len();
    if b[rank..].iter().any(|&v| v != 0) {
        return None;
    }
    let mut y = vec![0u64; m];
    let mut ygens: Vec<(usize, u64, u64)> = Vec::new();
    for (i, &e) in exps.iter().enumerate() {
        if b[i] != 0 && vp(b[i] as u128, p) < e {
            return None;
        }
        let pe = pow_u64(p, e);
        y[i] = b[i] / pe;
        if e > 0 {
            ygens.push((i, pow_u64(p, t - e), pe));
        }
    }
    for i in rank..m {
        ygens.push((i, 1, q));
    }
    let apply = |col: usize, scale: u64| -> Vec<u64> { (0..m).map(|r| c[r][col] * scale % q).collect() };
    let mut base = vec![0u64; m];
    for (i, &yi) in y.iter().enumerate() {
        if yi != 0 {
            for (bx, v) in base.iter_mut().zip(apply(i, yi)) {
                *bx = (*bx + v) % q;
            }
        }
    }
    let gens = ygens.iter().map(|&(i, s, _)| apply(i, s)).collect();
    let counts = ygens.iter().map(|&(_, _, n)| n).collect();
    Some(Coset { base, gens, counts })
}

/// Naive count over all of `(Z/q)^{m×n}`, for cross-checking the fast paths.
pub fn count_naive(ctx: &PrimeContext, s: &SymForm, t_form: &SymForm, t: u32) -> u128 {
    let (m, n) = (s.rank(), t_form.rank());
    let q = ctx.p().pow(t);
    let to_mod = |x: &Rat| rat_mod(x.numer(), x.denom(), q).unwrap();
    let sg: Vec<u64> = s.half_gram().iter().map(to_mod).collect();
    let tg: Vec<u64> = t_form.half_gram().iter().map(to_mod).collect();
    let total = (q as u128).pow((m * n) as u32);
    let mut cnt = 0u128;
    for mut idx in 0..total {
        let mut x = vec![0u64; m * n];
        for v in x.iter_mut() {
            *v = (idx % q as u128) as u64;
            idx /= q as u128;
        }
        let ok = (0..n).all(|i| {
            (i..n).all(|j| {
                let mut acc = 0u64;
                for a in 0..m {
                    for bb in 0..m {
                        acc = (acc + x[a * n + i] * sg[a * m + bb] % q * x[bb * n + j]) % q;
                    }
                }
                acc == tg[i * n + j]
            })
        });
        if ok {
            cnt += 1;
        }
    }
    cnt
}

//! Finite windows on the Bruhat-Tits tree of `PGL_2(Q_{p^2})`, σ-linear
//! special endomorphisms acting on it, and the tubes they cut out.
//!
//! Vertices are homothety classes of `Z_{p^2}`-lattices in `U = Q_{p^2}^2`,
//! stored in the Hermite normal form `[[p^α, r], [0, p^γ]]` with
//! `r ∈ Z_{p^2} / p^α` and `min(α, γ, v(r)) = 0`. Arithmetic in `Z_{p^2}`
//! is done modulo `p^N` with `N` as large as fits in 62 bits; every step that
//! divides by `p` tracks the digits lost and fails loudly when it runs out.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};
use crate::padic_core::{norm_preimage_mod, Place, PrimeContext};
use crate::qform::{represented_over, DiagonalForm};
use crate::{Int, Rat};

// ---------------------------------------------------------------------------
// Z_{p^2} modulo p^N

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Zq {
    a: u64,
    b: u64,
}

const ZERO: Zq = Zq { a: 0, b: 0 };

type Mat = [Zq; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ring {
    p: u64,
    delta: u64,
    n: u32,
    m: u64,
}

impl Ring {
    fn new(ctx: &PrimeContext) -> Self {
        let p = ctx.p();
        let (mut n, mut m) = (0u32, 1u64);
        while let Some(x) = m.checked_mul(p) {
            if x >= 1 << 62 {
                break;
            }
            m = x;
            n += 1;
        }
        Ring { p, delta: ctx.delta(), n, m }
    }

    fn pw(&self, k: u32) -> u64 {
        if k >= self.n {
            0
        } else {
            self.p.pow(k)
        }
    }

    fn int(&self, x: i64) -> u64 {
        x.rem_euclid(self.m as i64) as u64
    }

    fn vz(&self, x: u64, cap: u32) -> u32 {
        if x == 0 {
            return cap;
        }
        arith::vp(x as u128, self.p).min(cap)
    }

    fn val(&self, x: Zq, cap: u32) -> u32 {
        self.vz(x.a, cap).min(self.vz(x.b, cap))
    }

    fn add(&self, x: Zq, y: Zq) -> Zq {
        Zq { a: arith::addmod(x.a, y.a, self.m), b: arith::addmod(x.b, y.b, self.m) }
    }

    fn sub(&self, x: Zq, y: Zq) -> Zq {
        Zq { a: arith::submod(x.a, y.a, self.m), b: arith::submod(x.b, y.b, self.m) }
    }

    fn neg(&self, x: Zq) -> Zq {
        Zq { a: arith::negmod(x.a, self.m), b: arith::negmod(x.b, self.m) }
    }

    fn mul(&self, x: Zq, y: Zq) -> Zq {
        let m = self.m;
        let bb = arith::mulmod(arith::mulmod(x.b, y.b, m), self.delta, m);
        Zq {
            a: arith::addmod(arith::mulmod(x.a, y.a, m), bb, m),
            b: arith::addmod(arith::mulmod(x.a, y.b, m), arith::mulmod(x.b, y.a, m), m),
        }
    }

    fn conj(&self, x: Zq) -> Zq {
        Zq { a: x.a, b: arith::negmod(x.b, self.m) }
    }

    fn scalar(&self, x: u64) -> Zq {
        Zq { a: x % self.m, b: 0 }
    }

    fn inv_unit(&self, x: Zq) -> Zq {
        let m = self.m;
        let nm = arith::submod(
            arith::mulmod(x.a, x.a, m),
            arith::mulmod(self.delta, arith::mulmod(x.b, x.b, m), m),
            m,
        );
        let inv = arith::inv_mod(nm, m).expect("unit of Z_{p^2}");
        Zq { a: arith::mulmod(x.a, inv, m), b: arith::mulmod(arith::negmod(x.b, m), inv, m) }
    }

    /// Exact division by `p^k`; the caller knows `v(x) >= k`.
    fn divp(&self, x: Zq, k: u32) -> Zq {
        let d = self.p.pow(k);
        debug_assert!(x.a.is_multiple_of(d) && x.b.is_multiple_of(d));
        Zq { a: x.a / d, b: x.b / d }
    }

    fn mat_mul(&self, x: &Mat, y: &Mat) -> Mat {
        let e = |i: usize, j: usize| self.add(self.mul(x[2 * i], y[j]), self.mul(x[2 * i + 1], y[2 + j]));
        [e(0, 0), e(0, 1), e(1, 0), e(1, 1)]
    }

    fn mat_conj(&self, x: &Mat) -> Mat {
        [self.conj(x[0]), self.conj(x[1]), self.conj(x[2]), self.conj(x[3])]
    }

    fn adj(&self, x: &Mat) -> Mat {
        [x[3], self.neg(x[1]), self.neg(x[2]), x[0]]
    }

    fn minval(&self, x: &Mat, cap: u32) -> u32 {
        x.iter().map(|&e| self.val(e, cap)).min().unwrap()
    }
}

// ---------------------------------------------------------------------------
// Vertices

/// A vertex of the tree: the class of the lattice spanned by the columns of
/// `[[p^α, r], [0, p^γ]]`, with `r = r_a + r_b δ` reduced modulo `p^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeClass {
    pub alpha: u32,
    pub gamma: u32,
    pub r: (u64, u64),
}

impl LatticeClass {
    /// The class of `Z_{p^2}^2`.
    pub const BASE: LatticeClass = LatticeClass { alpha: 0, gamma: 0, r: (0, 0) };

    /// Distance to the base vertex.
    pub fn depth(&self) -> u32 {
        self.alpha + self.gamma
    }

    fn matrix(&self, ring: &Ring) -> Mat {
        [ring.scalar(ring.pw(self.alpha)), Zq { a: self.r.0, b: self.r.1 }, ZERO, ring.scalar(ring.pw(self.gamma))]
    }
}

impl fmt::Display for LatticeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}.{}", self.alpha, self.gamma, self.r.0, self.r.1)
    }
}

/// Normal form of the lattice spanned by the columns of `h`, whose entries
/// are known modulo `p^prec`.
fn hnf(ring: &Ring, h: Mat, prec: u32) -> Result<LatticeClass> {
    let [mut x11, mut x12, mut x21, mut x22] = h;
    let (v21, v22) = (ring.val(x21, prec), ring.val(x22, prec));
    if v21.min(v22) >= prec {
        return Err(Error::PrecisionExhausted(format!("bottom row vanishes modulo p^{prec}")));
    }
    if v21 < v22 {
        std::mem::swap(&mut x11, &mut x12);
        std::mem::swap(&mut x21, &mut x22);
    }
    let gamma = ring.val(x22, prec);
    let u_inv = ring.inv_unit(ring.divp(x22, gamma));
    let x12 = ring.mul(x12, u_inv);
    let t = ring.divp(x21, gamma);
    let x11 = ring.sub(x11, ring.mul(t, x12));
    let left = prec - gamma;
    let alpha = ring.val(x11, left);
    if alpha >= left {
        return Err(Error::PrecisionExhausted(format!("pivot vanishes modulo p^{left}")));
    }
    let pa = ring.p.pow(alpha);
    let mut r = (x12.a % pa, x12.b % pa);
    let vr = ring.val(Zq { a: r.0, b: r.1 }, alpha);
    let k = alpha.min(gamma).min(vr);
    let d = ring.p.pow(k);
    r = (r.0 / d, r.1 / d);
    Ok(LatticeClass { alpha: alpha - k, gamma: gamma - k, r })
}

// ---------------------------------------------------------------------------
// p-adic numbers with a fixed number of significant digits

/// `n · p^k`, with `n` known modulo `p^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pad {
    k: i32,
    n: u64,
}

const PZERO: Pad = Pad { k: 0, n: 0 };

impl Ring {
    fn pad_rat(&self, x: &Rat) -> Pad {
        if x.is_zero() {
            return PZERO;
        }
        let k = crate::padic_core::ordp(self.p, x).unwrap();
        let pk = Rat::from_integer(Int::from(self.p).pow(k.unsigned_abs() as u32));
        let u = if k >= 0 { x / pk } else { x * pk };
        Pad { k: k as i32, n: arith::rat_mod(u.numer(), u.denom(), self.m).unwrap() }
    }

    fn pad_add(&self, x: Pad, y: Pad) -> Pad {
        if x.n == 0 {
            return y;
        }
        if y.n == 0 {
            return x;
        }
        let k = x.k.min(y.k);
        let lift = |z: Pad| arith::mulmod(z.n, self.pw((z.k - k) as u32), self.m);
        Pad { k, n: arith::addmod(lift(x), lift(y), self.m) }
    }

    fn pad_mul(&self, x: Pad, y: Pad) -> Pad {
        if x.n == 0 || y.n == 0 {
            return PZERO;
        }
        Pad { k: x.k + y.k, n: arith::mulmod(x.n, y.n, self.m) }
    }

    fn pad_neg(&self, x: Pad) -> Pad {
        Pad { k: x.k, n: arith::negmod(x.n, self.m) }
    }

    /// Square root of a rational square, to full precision.
    fn pad_sqrt(&self, x: &Rat) -> Pad {
        if x.is_zero() {
            return PZERO;
        }
        let p = self.pad_rat(x);
        debug_assert!(p.k % 2 == 0);
        Pad { k: p.k / 2, n: arith::sqrt_unit_mod_pk(p.n, self.p, self.n).expect("square unit") }
    }
}

/// An element `a + bδ` of `Q_{p^2}` with both parts as [`Pad`].
#[derive(Debug, Clone, Copy)]
struct Qq {
    a: Pad,
    b: Pad,
}

impl Ring {
    fn qq_mul(&self, x: Qq, y: Qq) -> Qq {
        let d = Pad { k: 0, n: self.delta };
        Qq {
            a: self.pad_add(self.pad_mul(x.a, y.a), self.pad_mul(d, self.pad_mul(x.b, y.b))),
            b: self.pad_add(self.pad_mul(x.a, y.b), self.pad_mul(x.b, y.a)),
        }
    }

    fn qq_real(&self, x: Pad) -> Qq {
        Qq { a: x, b: PZERO }
    }

    /// Clears denominators: returns `(M', s)` with `M = p^{-s} M'` and `M'` integral.
    fn integralize(&self, m: &[Qq; 4]) -> (Mat, i32) {
        let kmin = m
            .iter()
            .flat_map(|q| [q.a, q.b])
            .filter(|x| x.n != 0)
            .map(|x| x.k)
            .min()
            .unwrap_or(0);
        let shift = -kmin;
        let res = |x: Pad| {
            if x.n == 0 {
                0
            } else {
                arith::mulmod(x.n, self.pw((x.k + shift) as u32), self.m)
            }
        };
        let e = |q: Qq| Zq { a: res(q.a), b: res(q.b) };
        ([e(m[0]), e(m[1]), e(m[2]), e(m[3])], shift)
    }
}

// ---------------------------------------------------------------------------
// Special endomorphisms

/// A σ-linear endomorphism `β = M σ` of `U` with `β² = Q''(β)`; the matrix is
/// stored as `M = p^{-shift} M'` with `M'` integral and known modulo `p^prec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialEndo {
    ring: Ring,
    m: Mat,
    shift: i32,
    q: Rat,
    ord: i64,
    prec: u32,
}

impl SpecialEndo {
    /// `β = [[a, b₀δ], [c₀δ, a^σ]] σ` with `a = a₀ + a₁δ`, all integers.
    pub fn from_ints(ctx: &PrimeContext, a: (i64, i64), b0: i64, c0: i64) -> Result<Self> {
        let ring = Ring::new(ctx);
        let d = ctx.delta() as i64;
        let q = Rat::from_integer(Int::from(a.0 * a.0 - d * a.1 * a.1 - d * b0 * c0));
        if q.is_zero() {
            return Err(Error::Domain("Q''(beta) must be nonzero".into()));
        }
        let m = [
            Zq { a: ring.int(a.0), b: ring.int(a.1) },
            Zq { a: 0, b: ring.int(b0) },
            Zq { a: 0, b: ring.int(c0) },
            Zq { a: ring.int(a.0), b: ring.int(-a.1) },
        ];
        Self::checked(ring, m, 0, q)
    }

    fn checked(ring: Ring, m: Mat, shift: i32, q: Rat) -> Result<Self> {
        let ord = crate::padic_core::ordp(ring.p, &q).unwrap();
        let beta = SpecialEndo { ring, m, shift, q, ord, prec: ring.n };
        beta.verify_square()?;
        Ok(beta)
    }

    pub fn q(&self) -> &Rat {
        &self.q
    }

    /// `ord_p Q''(β)`.
    pub fn ord(&self) -> i64 {
        self.ord
    }

    /// Whether the stored matrix has the shape `[[a, b], [c, a^σ]]`, `b^σ = -b`, `c^σ = -c`.
    pub fn has_standard_shape(&self) -> bool {
        let r = &self.ring;
        self.m[1].a == 0 && self.m[2].a == 0 && self.m[3] == r.conj(self.m[0])
    }

    /// Checks `M M^σ = Q'' · 1` at the working precision.
    fn verify_square(&self) -> Result<()> {
        let r = &self.ring;
        let sq = r.mat_mul(&self.m, &r.mat_conj(&self.m));
        let target = r.pad_mul(r.pad_rat(&self.q), Pad { k: 2 * self.shift, n: 1 });
        if target.k < 0 {
            return Err(Error::PrecisionExhausted("negative scaling in square check".into()));
        }
        let t = arith::mulmod(target.n, r.pw(target.k as u32), r.m);
        let want = [r.scalar(t), ZERO, ZERO, r.scalar(t)];
        if sq != want {
            return Err(Error::PrecisionExhausted(format!("beta^2 != Q''(beta) modulo p^{}", self.prec)));
        }
        Ok(())
    }

    /// `β_i β_j + β_j β_i = 0` at the working precision.
    pub fn anticommutes(&self, other: &SpecialEndo) -> bool {
        let r = &self.ring;
        let x = r.mat_mul(&self.m, &r.mat_conj(&other.m));
        let y = r.mat_mul(&other.m, &r.mat_conj(&self.m));
        (0..4).all(|i| r.add(x[i], y[i]) == ZERO)
    }

    /// `adj(g) M' g^σ` for the vertex `g`.
    fn conj_by(&self, v: &LatticeClass) -> Mat {
        let r = &self.ring;
        let g = v.matrix(r);
        r.mat_mul(&r.adj(&g), &r.mat_mul(&self.m, &r.mat_conj(&g)))
    }
}

/// Kind of fixed-point set `B^β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedSetType {
    /// A copy of the tree of `PGL_2(Q_p)`: even `ord_p Q''`.
    SubtreePgl2Qp,
    /// The midpoint of one edge: odd `ord_p Q''`.
    SingleMidpoint,
}

pub fn classify_fixed_set(beta: &SpecialEndo) -> FixedSetType {
    if beta.ord.rem_euclid(2) == 0 {
        FixedSetType::SubtreePgl2Qp
    } else {
        FixedSetType::SingleMidpoint
    }
}

// ---------------------------------------------------------------------------
// The tree

/// Vertices within a radius of the base vertex, each with its parent.
#[derive(Debug, Clone)]
pub struct Ball {
    pub radius: u32,
    pub vertices: Vec<LatticeClass>,
    pub parent: Vec<Option<usize>>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Closed count of a ball of radius `r` in a tree of degree `p^2 + 1`.
pub fn ball_size(p: u64, r: u32) -> u128 {
    let q = (p as u128) * (p as u128);
    1 + (q + 1) * (q.pow(r) - 1) / (q - 1)
}

#[derive(Debug, Clone)]
pub struct Tree {
    ctx: PrimeContext,
    ring: Ring,
}

impl Tree {
    pub fn new(ctx: PrimeContext) -> Self {
        Tree { ctx, ring: Ring::new(&ctx) }
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    /// Digits of `Z_{p^2}` arithmetic carried.
    pub fn digits(&self) -> u32 {
        self.ring.n
    }

    /// The `p^2 + 1` neighbours of `v`.
    pub fn neighbors(&self, v: &LatticeClass) -> Result<Vec<LatticeClass>> {
        let r = &self.ring;
        if v.depth() + 2 >= r.n {
            return Err(Error::PrecisionExhausted(format!("vertex at depth {}", v.depth())));
        }
        let g = v.matrix(r);
        let p = r.p;
        let mut out = Vec::with_capacity((p * p + 1) as usize);
        for a in 0..p {
            for b in 0..p {
                let x = Zq { a, b };
                let step = [r.scalar(1), ZERO, x, r.scalar(p)];
                out.push(hnf(r, r.mat_mul(&g, &step), r.n)?);
            }
        }
        let step = [r.scalar(p), ZERO, ZERO, r.scalar(1)];
        out.push(hnf(r, r.mat_mul(&g, &step), r.n)?);
        Ok(out)
    }

    /// Tree distance between two vertices.
    pub fn distance(&self, x: &LatticeClass, y: &LatticeClass) -> u32 {
        let r = &self.ring;
        let prod = r.mat_mul(&r.adj(&x.matrix(r)), &y.matrix(r));
        x.depth() + y.depth() - 2 * r.minval(&prod, r.n)
    }

    /// All vertices within `radius` of the base vertex.
    pub fn ball(&self, radius: u32) -> Result<Ball> {
        let needed = ball_size(self.ctx.p(), radius.min(40));
        let budget = crate::density::budget() / 1000;
        if needed > budget {
            return Err(Error::Budget { needed, budget });
        }
        let mut vertices = vec![LatticeClass::BASE];
        let mut parent = vec![None];
        let mut seen: HashSet<LatticeClass> = HashSet::from([LatticeClass::BASE]);
        let mut start = 0;
        for _ in 0..radius {
            let end = vertices.len();
            for i in start..end {
                for w in self.neighbors(&vertices[i])? {
                    if seen.insert(w) {
                        vertices.push(w);
                        parent.push(Some(i));
                    }
                }
            }
            start = end;
        }
        Ok(Ball { radius, vertices, parent })
    }

    /// The image class `β(Λ)`.
    pub fn apply_endo(&self, beta: &SpecialEndo, v: &LatticeClass) -> Result<LatticeClass> {
        let r = &self.ring;
        let g = v.matrix(r);
        hnf(r, r.mat_mul(&beta.m, &r.mat_conj(&g)), beta.prec)
    }

    /// `d(Λ, βΛ)`, twice the distance from `Λ` to `B^β`.
    pub fn displacement(&self, beta: &SpecialEndo, v: &LatticeClass) -> Result<u32> {
        let r = &self.ring;
        let mv = r.minval(&beta.conj_by(v), beta.prec);
        if mv >= beta.prec {
            return Err(Error::PrecisionExhausted(format!("displacement at vertex {v}")));
        }
        let d = 2 * (v.depth() as i64 + beta.shift as i64) + beta.ord - 2 * mv as i64;
        debug_assert!(d >= 0 && (d - beta.ord).rem_euclid(2) == 0);
        Ok(d as u32)
    }

    /// Distance from `v` to the fixed set of `β`, a half-integer.
    pub fn distance_to_fixed_set(&self, beta: &SpecialEndo, v: &LatticeClass) -> Result<Rat> {
        Ok(Rat::new(self.displacement(beta, v)?.into(), 2.into()))
    }

    /// Whether `β(Λ) ⊆ Λ`.
    pub fn stabilizes(&self, beta: &SpecialEndo, v: &LatticeClass) -> Result<bool> {
        let r = &self.ring;
        let need = v.depth() as i64 + beta.shift as i64;
        let mv = r.minval(&beta.conj_by(v), beta.prec) as i64;
        if mv >= beta.prec as i64 && need >= beta.prec as i64 {
            return Err(Error::PrecisionExhausted(format!("containment at vertex {v}")));
        }
        Ok(mv >= need)
    }

    /// Vertices of the ball fixed by `β`.
    pub fn fixed_vertices(&self, beta: &SpecialEndo, ball: &Ball) -> Result<Vec<LatticeClass>> {
        let mut out = Vec::new();
        for v in &ball.vertices {
            if self.displacement(beta, v)? == 0 {
                out.push(*v);
            }
        }
        Ok(out)
    }

    /// One step along the geodesic from `x` towards `y`.
    fn step_towards(&self, x: &LatticeClass, y: &LatticeClass) -> Result<LatticeClass> {
        let d = self.distance(x, y);
        for w in self.neighbors(x)? {
            if self.distance(&w, y) + 1 == d {
                return Ok(w);
            }
        }
        unreachable!("a tree geodesic always has a next vertex")
    }

    /// Vertex seeds inside the common fixed set: the vertex itself, or both
    /// ends of the fixed edge when the common fixed point is a midpoint.
    fn common_fixed_point(&self, betas: &[SpecialEndo]) -> Result<Vec<LatticeClass>> {
        let mut x = LatticeClass::BASE;
        for beta in betas {
            let y = self.apply_endo(beta, &x)?;
            let d = self.distance(&x, &y);
            for _ in 0..d / 2 {
                x = self.step_towards(&x, &y)?;
            }
            if d % 2 == 1 {
                let other = self.step_towards(&x, &y)?;
                return Ok(vec![x, other]);
            }
        }
        Ok(vec![x])
    }

    /// Whether `v` lies in every closed tube `CT(β_i)`.
    pub fn in_tube(&self, betas: &[SpecialEndo], v: &LatticeClass) -> Result<bool> {
        for beta in betas {
            if self.displacement(beta, v)? as i64 > beta.ord {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Enumerates the vertices of `CT(β_1) ∩ ... ∩ CT(β_n)`.
    pub fn tube_count(&self, triple: &SpecialTriple) -> Result<TubeReport> {
        let betas = &triple.betas;
        let seeds = self.common_fixed_point(betas)?;
        let mut index: HashMap<LatticeClass, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut queue = VecDeque::new();
        for s in seeds {
            if self.in_tube(betas, &s)? && !index.contains_key(&s) {
                index.insert(s, vertices.len());
                vertices.push(s);
                queue.push_back(s);
            }
        }
        let mut rejected: HashSet<LatticeClass> = HashSet::new();
        let mut edges = Vec::new();
        while let Some(v) = queue.pop_front() {
            let iv = index[&v];
            for w in self.neighbors(&v)? {
                if rejected.contains(&w) {
                    continue;
                }
                if let Some(&iw) = index.get(&w) {
                    if iv < iw {
                        edges.push((iv, iw));
                    }
                    continue;
                }
                if self.in_tube(betas, &w)? {
                    let iw = vertices.len();
                    index.insert(w, iw);
                    vertices.push(w);
                    queue.push_back(w);
                    edges.push((iv, iw));
                } else {
                    rejected.insert(w);
                }
            }
        }
        let radius = vertices.iter().map(|v| v.depth()).max().unwrap_or(0);
        let cases = (0..betas.len()).skip(1).map(|i| gamma_case(triple, i).ok()).collect::<Option<Vec<_>>>();
        Ok(TubeReport {
            target: triple.target.clone(),
            count: vertices.len(),
            edges: edges.len(),
            radius,
            boundary: rejected.len(),
            fixed_set_types: betas.iter().map(classify_fixed_set).collect(),
            cases,
            vertices,
            edge_list: edges,
        })
    }
}

// ---------------------------------------------------------------------------
// Triples

/// Pairwise anticommuting special endomorphisms with `Q''(β_i) = ε_i p^{r_i}`.
#[derive(Debug, Clone)]
pub struct SpecialTriple {
    pub target: DiagonalForm,
    pub betas: Vec<SpecialEndo>,
    /// Built by the route through `β_1 = u p^{r_1/2} σ` (even `r_1`).
    pub via_even_route: bool,
}

/// The quaternary space `diag(1, 1, 1, Δ)` of special endomorphisms.
pub fn special_space(ctx: &PrimeContext) -> Vec<Rat> {
    crate::qform::rats(&[1, 1, 1, ctx.delta() as i64])
}

fn is_square(ctx: &PrimeContext, x: &Rat) -> bool {
    match ctx.ordp(x) {
        None => true,
        Some(k) => k % 2 == 0 && ctx.chi(&(x / ctx.p_pow(k))).unwrap() == 1,
    }
}

/// Solves `A λ² + B μ² = c` with `μ` rational; `None` if `⟨A, B⟩` misses `c`.
fn solve_binary(ctx: &PrimeContext, ring: &Ring, a: &Rat, b: &Rat, c: &Rat) -> Result<Option<(Pad, Rat)>> {
    if !represented_over(std::slice::from_ref(c), &[a.clone(), b.clone()], Place::Finite(ctx.p()))? {
        return Ok(None);
    }
    let p = ctx.p() as i64;
    let mut candidates = vec![Rat::zero()];
    for k in -12..=12 {
        for y in 1..p * p {
            if y % p != 0 {
                candidates.push(Rat::from_integer(y.into()) * ctx.p_pow(k));
            }
        }
    }
    for mu in candidates {
        let rest = (c - b * &mu * &mu) / a;
        if is_square(ctx, &rest) {
            return Ok(Some((ring.pad_sqrt(&rest), mu)));
        }
    }
    Err(Error::Unsupported(format!("no small solution of {a} x^2 + {b} y^2 = {c} found")))
}

fn diag_entries(t: &DiagonalForm) -> Vec<(Rat, i64, Rat)> {
    let ctx = t.ctx();
    t.entries()
        .into_iter()
        .zip(t.exps())
        .map(|(e, &r)| (e.clone(), r, e / ctx.p_pow(r)))
        .collect()
}

/// Builds an anticommuting triple with `Q'' = Tq`.
///
/// For even minimal exponent the route goes through `β_1 = u p^{r_1/2} σ` and
/// trace-zero `γ_i` over `Q_p`; otherwise [`construct_triple_general`] is used.
pub fn construct_triple(tq: &DiagonalForm) -> Result<SpecialTriple> {
    check_target(tq)?;
    if tq.exps()[0] % 2 == 0 {
        construct_triple_even(tq)
    } else {
        construct_triple_general(tq)
    }
}

fn check_target(tq: &DiagonalForm) -> Result<()> {
    if tq.rank() != 3 {
        return Err(Error::RankMismatch { expected: 3, got: tq.rank() });
    }
    if tq.exps().iter().any(|&r| r < 0) {
        return Err(Error::Domain(format!("p^-1 T = {tq} must be integral, i.e. T = 0 mod p")));
    }
    if !represented_over(&tq.entries(), &special_space(tq.ctx()), Place::Finite(tq.ctx().p()))? {
        return Err(Error::NotRepresentable);
    }
    Ok(())
}

fn finish(tq: &DiagonalForm, ring: Ring, mats: Vec<[Qq; 4]>, even: bool) -> Result<SpecialTriple> {
    let mut betas = Vec::new();
    for (m, (e, _, _)) in mats.iter().zip(diag_entries(tq)) {
        let (mi, shift) = ring.integralize(m);
        betas.push(SpecialEndo::checked(ring, mi, shift, e)?);
    }
    for i in 0..betas.len() {
        for j in i + 1..betas.len() {
            if !betas[i].anticommutes(&betas[j]) {
                return Err(Error::PrecisionExhausted(format!("beta_{} and beta_{} fail to anticommute", i + 1, j + 1)));
            }
        }
    }
    Ok(SpecialTriple { target: tq.clone(), betas, via_even_route: even })
}

/// `β_1 = u p^{r_1/2} σ`, `β_i = γ_i u δ σ` with `γ_2 = [[0,1],[c_2,0]]`,
/// `γ_3 = [[w,x],[-c_2 x,-w]]`, `c_i = -Δ^{-1} ε_1^{-1} ε_i p^{r_i}`.
pub fn construct_triple_even(tq: &DiagonalForm) -> Result<SpecialTriple> {
    check_target(tq)?;
    let ctx = *tq.ctx();
    let ring = Ring::new(&ctx);
    let ent = diag_entries(tq);
    let (_, r1, e1) = &ent[0];
    if r1 % 2 != 0 {
        return Err(Error::WrongCase("the even route needs r_1 even".into()));
    }
    let e1_res = arith::rat_mod(e1.numer(), e1.denom(), ring.m).unwrap();
    let (ua, ub) = norm_preimage_mod(ring.p, ring.delta, e1_res, ring.n);
    let u = Qq { a: Pad { k: 0, n: ua }, b: Pad { k: 0, n: ub } };
    let b1 = ring.qq_mul(u, ring.qq_real(Pad { k: (r1 / 2) as i32, n: 1 }));
    let zero = ring.qq_real(PZERO);
    let udelta = ring.qq_mul(u, Qq { a: PZERO, b: Pad { k: 0, n: 1 } });
    let delta = Rat::from_integer(ctx.delta().into());
    let c = |i: usize| -&ent[i].0 / (&delta * e1);
    let (c2, c3) = (c(1), c(2));
    let (w, x) = solve_binary(&ctx, &ring, &Rat::one(), &-&c2, &c3)?.ok_or(Error::NotRepresentable)?;
    let x = ring.pad_rat(&x);
    let gamma2 = [PZERO, Pad { k: 0, n: 1 }, ring.pad_rat(&c2), PZERO];
    let gamma3 = [w, x, ring.pad_neg(ring.pad_mul(ring.pad_rat(&c2), x)), ring.pad_neg(w)];
    let times = |g: [Pad; 4]| g.map(|e| ring.qq_mul(ring.qq_real(e), udelta));
    finish(tq, ring, vec![[b1, zero, zero, b1], times(gamma2), times(gamma3)], true)
}

/// Works for every representable target, with odd exponents allowed anywhere.
///
/// In the basis where special endomorphisms read `[[a, b], [c, -a^σ]] σ` with
/// `b, c ∈ Q_p`, take `β_1 = [[0,1],[q,0]] σ` and `β_i = (A_i + s_i δ) σ`,
/// `A_i = [[w_i, x_i], [-q x_i, -w_i]]`; then `Q''` on the complement of `β_1`
/// is `w² - Δ s² - q x²`. The result is conjugated back by `diag(1, δ)`.
pub fn construct_triple_general(tq: &DiagonalForm) -> Result<SpecialTriple> {
    check_target(tq)?;
    let ctx = *tq.ctx();
    let ring = Ring::new(&ctx);
    let ent = diag_entries(tq);
    let p = ctx.p();
    let delta = Rat::from_integer(ctx.delta().into());
    for (i1, i2, i3) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
        let (q, r1, e1) = &ent[i1];
        let (c2, r2, e2) = &ent[i2];
        let c3 = &ent[i3].0;
        let x2 = if r2 % 2 == 0 {
            Rat::zero()
        } else if r1 % 2 == 0 {
            ctx.p_pow((r2 - 1 - r1) / 2)
        } else {
            let ratio = -e2 / e1;
            if !is_square(&ctx, &ratio) {
                continue;
            }
            let res = arith::rat_mod(ratio.numer(), ratio.denom(), p).unwrap();
            let mut y = arith::sqrt_mod_prime(res, p).unwrap() as i64;
            let lead = e2 + e1 * Rat::from_integer((y * y).into());
            if ctx.ordp(&lead).is_none_or(|v| v >= 2) {
                y += p as i64;
            }
            Rat::from_integer(y.into()) * ctx.p_pow((r2 - r1) / 2)
        };
        let big_r = c2 + q * &x2 * &x2;
        let (v, rho) = ctx.split(&big_r);
        debug_assert!(v % 2 == 0);
        let rho_res = arith::rat_mod(rho.numer(), rho.denom(), ring.m).unwrap();
        let (w0, s0) = norm_preimage_mod(p, ctx.delta(), rho_res, ring.n);
        let half = (v / 2) as i32;
        let (w2, s2) = (Pad { k: half, n: w0 }, Pad { k: half, n: s0 });
        let a = -&delta * &big_r;
        let b = -(q * &big_r * c2);
        let Some((lam, mu)) = solve_binary(&ctx, &ring, &a, &b, c3)? else {
            continue;
        };
        let (pq, px2, pmu, pd) = (ring.pad_rat(q), ring.pad_rat(&x2), ring.pad_rat(&mu), ring.pad_rat(&delta));
        let qx2 = ring.pad_mul(pq, px2);
        let w3 = ring.pad_add(ring.pad_mul(lam, ring.pad_mul(pd, s2)), ring.pad_mul(pmu, ring.pad_mul(qx2, w2)));
        let s3 = ring.pad_add(ring.pad_mul(lam, w2), ring.pad_mul(pmu, ring.pad_mul(qx2, s2)));
        let x3 = ring.pad_mul(pmu, ring.pad_rat(&big_r));
        let inv_delta = ring.pad_rat(&(Rat::one() / &delta));
        // adapted (w, s, b, c) -> standard shape [[a, -bδ/Δ], [cδ, a^σ]]
        let std_shape = |w: Pad, s: Pad, bb: Pad, cc: Pad| -> [Qq; 4] {
            [
                Qq { a: w, b: s },
                Qq { a: PZERO, b: ring.pad_neg(ring.pad_mul(bb, inv_delta)) },
                Qq { a: PZERO, b: cc },
                Qq { a: w, b: ring.pad_neg(s) },
            ]
        };
        let beta = |w: Pad, s: Pad, x: Pad| std_shape(w, s, x, ring.pad_neg(ring.pad_mul(pq, x)));
        let mut mats = vec![[Qq { a: PZERO, b: PZERO }; 4]; 3];
        mats[i1] = std_shape(PZERO, PZERO, Pad { k: 0, n: 1 }, pq);
        mats[i2] = beta(w2, s2, px2);
        mats[i3] = beta(w3, s3, x3);
        return finish(tq, ring, mats, false);
    }
    Err(Error::NotRepresentable)
}

// ---------------------------------------------------------------------------
// Reports and closed counts

/// Shape of the fixed set of `γ_i` on the tree of `PGL_2(Q_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaCase {
    Split,
    UnramifiedElliptic,
    RamifiedElliptic,
}

/// Classifies `γ_i² = -Δ^{-1} ε_1^{-1} ε_i p^{r_i}` for `i ≥ 1` (zero-based).
pub fn gamma_case(triple: &SpecialTriple, i: usize) -> Result<GammaCase> {
    let tq = &triple.target;
    if i == 0 || i >= tq.rank() {
        return Err(Error::Domain(format!("gamma index {i} out of range")));
    }
    if tq.exps()[0] % 2 != 0 {
        return Err(Error::WrongCase("gamma_i is defined only for even r_1".into()));
    }
    let ctx = tq.ctx();
    let c2 = -&tq.entries()[i] / (Rat::from_integer(ctx.delta().into()) * &diag_entries(tq)[0].2);
    Ok(if is_square(ctx, &c2) {
        GammaCase::Split
    } else if tq.exps()[i] % 2 == 0 {
        GammaCase::UnramifiedElliptic
    } else {
        GammaCase::RamifiedElliptic
    })
}

#[derive(Debug, Clone)]
pub struct TubeReport {
    pub target: DiagonalForm,
    /// Vertices of the tube.
    pub count: usize,
    /// Edges between tube vertices.
    pub edges: usize,
    /// Largest depth of a tube vertex below the base vertex.
    pub radius: u32,
    /// Outside neighbours checked; the search ends only when none is added.
    pub boundary: usize,
    pub fixed_set_types: Vec<FixedSetType>,
    pub cases: Option<Vec<GammaCase>>,
    pub vertices: Vec<LatticeClass>,
    pub edge_list: Vec<(usize, usize)>,
}

impl TubeReport {
    /// `u v` per line, vertices named by their normal forms.
    pub fn edge_list_text(&self) -> String {
        let mut lines: Vec<String> = self
            .edge_list
            .iter()
            .map(|&(a, b)| format!("{} {}", self.vertices[a], self.vertices[b]))
            .collect();
        lines.sort();
        lines.join("\n")
    }
}

/// Builds the triple for `Tq` and counts its tube.
pub fn tube_count_for(tq: &DiagonalForm) -> Result<TubeReport> {
    let triple = construct_triple(tq)?;
    Tree::new(*tq.ctx()).tube_count(&triple)
}

fn geometric(p: u64, terms: i64) -> Int {
    let q = Int::from(p) * Int::from(p);
    (0..terms.max(0)).map(|i| num_traits::pow(q.clone(), i as usize)).sum()
}

/// `2(1 + p^2 + ... + p^{r_1 - 1})`: a ball around the fixed midpoint.
pub fn closed_count_odd_r1(p: u64, r1: i64) -> Result<Int> {
    if r1 < 0 || r1 % 2 == 0 {
        return Err(Error::WrongCase(format!("r_1 = {r1} is not odd")));
    }
    Ok(Int::from(2) * geometric(p, (r1 + 1) / 2))
}

/// Whether `Tq` falls in the case `γ_2` split, `γ_3` unramified elliptic.
pub fn is_case1(tq: &DiagonalForm) -> bool {
    let ctx = tq.ctx();
    let r = tq.exps();
    let e = diag_entries(tq);
    let chi = |x: &Rat| ctx.chi(x).unwrap();
    tq.rank() == 3
        && r.iter().all(|&x| x >= 0 && x % 2 == 0)
        && chi(&-(&e[0].2 * &e[1].2)) == -1
        && chi(&-(&e[0].2 * &e[2].2)) == 1
}

/// Closed four-part count of the tube when `γ_2` is split and `γ_3` unramified elliptic.
pub fn closed_count_case1(tq: &DiagonalForm) -> Result<Int> {
    if !is_case1(tq) {
        return Err(Error::WrongCase(format!(
            "{tq}: needs r_1, r_2, r_3 even, chi(-e1 e2) = -1 and chi(-e1 e3) = 1"
        )));
    }
    let p = tq.ctx().p();
    let (h1, h2, h3) = (tq.exps()[0] / 2, tq.exps()[1] / 2, tq.exps()[2] / 2);
    let g = |m: i64| Int::one() + Int::from(p * p - p) * geometric(p, m);
    let mut total = g(h1);
    for j in 1..=h2 {
        total += Int::from(p - 1) * g(h1.min(h2 - j));
    }
    for k in 1..=h3 {
        total += Int::from(2) * g(h1.min(h3 - k));
        for j in 1..=h2.min(h3 - k) {
            total += Int::from(2 * (p - 1)) * g(h1.min(h2 - j).min(h3 - k - j));
        }
    }
    Ok(total)
}

/// `|T(β)_0| (1 - p^{-4})`, the density it should equal.
pub fn tube_density(p: u64, count: usize) -> Rat {
    let p4 = Rat::from_integer(Int::from(p).pow(4));
    Rat::from_integer(count.into()) * (Rat::one() - Rat::one() / p4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_core::UnitClass::{Delta as D, One as I};

    fn ctx3() -> PrimeContext {
        PrimeContext::new(3).unwrap()
    }

    #[test]
    fn ball_sizes() {
        let t = Tree::new(ctx3());
        assert_eq!(t.ball(0).unwrap().len(), 1);
        assert_eq!(t.ball(1).unwrap().len(), 11);
        assert_eq!(t.ball(2).unwrap().len(), 101);
        assert_eq!(ball_size(3, 3), t.ball(3).unwrap().len() as u128);
        let t5 = Tree::new(PrimeContext::new(5).unwrap());
        assert_eq!(t5.ball(2).unwrap().len() as u128, ball_size(5, 2));
    }

    #[test]
    fn distances_match_depth() {
        let t = Tree::new(ctx3());
        let ball = t.ball(3).unwrap();
        for (i, v) in ball.vertices.iter().enumerate() {
            assert_eq!(t.distance(&LatticeClass::BASE, v), v.depth());
            if let Some(j) = ball.parent[i] {
                assert_eq!(t.distance(v, &ball.vertices[j]), 1);
            }
        }
    }

    #[test]
    fn unit_endo_fixes_base() {
        let t = Tree::new(ctx3());
        let beta = SpecialEndo::from_ints(&ctx3(), (1, 0), 0, 0).unwrap();
        assert_eq!(t.apply_endo(&beta, &LatticeClass::BASE).unwrap(), LatticeClass::BASE);
        let scaled = SpecialEndo::from_ints(&ctx3(), (3, 0), 0, 0).unwrap();
        assert_eq!(t.apply_endo(&scaled, &LatticeClass::BASE).unwrap(), LatticeClass::BASE);
        assert_eq!(classify_fixed_set(&beta), FixedSetType::SubtreePgl2Qp);
    }

    #[test]
    fn odd_norm_moves_base_an_odd_distance() {
        let t = Tree::new(ctx3());
        // a = 0, b0 c0 = -p / Δ: Q'' = -Δ b0 c0 = 3
        let beta = SpecialEndo::from_ints(&ctx3(), (0, 0), 1, -3).unwrap();
        assert_eq!(beta.q(), &Rat::from_integer(6.into()));
        let img = t.apply_endo(&beta, &LatticeClass::BASE).unwrap();
        assert_eq!(t.distance(&LatticeClass::BASE, &img) % 2, 1);
        assert_eq!(classify_fixed_set(&beta), FixedSetType::SingleMidpoint);
    }

    #[test]
    fn case1_examples() {
        let c = ctx3();
        let f = |r: [i64; 3]| DiagonalForm::raw(c, r.to_vec(), vec![I, I, D]);
        assert_eq!(closed_count_case1(&f([0, 0, 0])).unwrap(), 1.into());
        assert_eq!(closed_count_case1(&f([0, 0, 4])).unwrap(), 5.into());
        assert!(closed_count_case1(&DiagonalForm::raw(c, vec![0, 0, 0], vec![I, I, I])).is_err());
        assert_eq!(closed_count_odd_r1(3, 1).unwrap(), 2.into());
        assert_eq!(closed_count_odd_r1(3, 3).unwrap(), 20.into());
        assert!(closed_count_odd_r1(3, 2).is_err());
    }

    #[test]
    fn triples_verify() {
        let c = ctx3();
        for (r, u) in [([0, 0, 0], [I, I, D]), ([1, 1, 1], [I, I, I]), ([0, 1, 2], [I, I, D]), ([1, 1, 2], [I, D, I])] {
            let tq = DiagonalForm::raw(c, r.to_vec(), u.to_vec());
            match construct_triple_general(&tq) {
                Ok(t) => assert!(t.betas.iter().all(|b| b.has_standard_shape())),
                Err(Error::NotRepresentable) => {}
                Err(e) => panic!("{tq}: {e}"),
            }
        }
    }
}

//! Unit groups of residue rings: (Z/p^n)* and (O_K/p^n)* for the three
//! quadratic extensions K/Q_p with p odd.
//!
//! Elements are written a + b*w where w = sqrt(d); for unramified K the
//! element d is a non-residue unit, for ramified K it is -p or -p*xi, so w
//! is the uniformizer. Coordinates live in
//!
//! ```text
//!     a mod p^ceil(n/2), b mod p^floor(n/2)       (ramified, p-adic level n)
//!     a, b mod p^n                                 (unramified)
//! ```
//!
//! Each group carries a presentation by independent cyclic generators
//! (torsion part first, then wild generators), with discrete logarithms
//! computed per prime by a baby-step/giant-step walk over the product of
//! cyclic factors. Generator orders and independence are verified at
//! construction time by exponentiation and dlog round trips.

use crate::arith::{
    self, exact_order, factorize, inv_mod, is_odd_prime, lcm, valuation, Lcg,
};
use crate::error::{Error, Result};
use crate::linalg::{self, subgroup_from_gens};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

/// Which of the three quadratic extensions of Q_p (p odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ExtKind {
    /// K = Q_p(sqrt(xi)), xi a non-residue unit.
    Unramified,
    /// K = Q_p(sqrt(-p)).
    RamifiedA,
    /// K = Q_p(sqrt(-p xi)).
    RamifiedB,
}

impl ExtKind {
    pub const ALL: [ExtKind; 3] = [ExtKind::Unramified, ExtKind::RamifiedA, ExtKind::RamifiedB];

    pub fn is_ramified(self) -> bool {
        !matches!(self, ExtKind::Unramified)
    }

    pub fn label(self) -> &'static str {
        match self {
            ExtKind::Unramified => "unramified",
            ExtKind::RamifiedA => "ramified-a",
            ExtKind::RamifiedB => "ramified-b",
        }
    }
}

/// A quadratic extension K = Q_p(sqrt(d)) of Q_p, p odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadExt {
    pub p: u64,
    pub kind: ExtKind,
    /// The defining element d, fixed per isomorphism class. The default
    /// representative uses the smallest non-residue xi mod p; `alternate`
    /// picks a different d in the same square class so tests can confirm
    /// the counts do not depend on the representative.
    pub d: i64,
}

impl QuadExt {
    pub fn new(p: u64, kind: ExtKind) -> Result<Self> {
        Self::build(p, kind, false)
    }

    /// A second representative of the same isomorphism class.
    pub fn alternate(p: u64, kind: ExtKind) -> Result<Self> {
        Self::build(p, kind, true)
    }

    fn build(p: u64, kind: ExtKind, alt: bool) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        let xi = arith::smallest_nonresidue(p);
        let d = match kind {
            ExtKind::Unramified => {
                if alt {
                    // any other non-residue defines the same extension
                    (xi + 1..p)
                        .find(|&a| arith::legendre(a as i64, p) == -1)
                        .map(|a| a as i64)
                        .unwrap_or((xi * 4 % p) as i64)
                } else {
                    xi as i64
                }
            }
            ExtKind::RamifiedA => {
                // -p, or -p * rho^2 for the alternate representative
                if alt {
                    -(p as i64) * 4
                } else {
                    -(p as i64)
                }
            }
            ExtKind::RamifiedB => {
                if alt {
                    -((p * xi) as i64) * 4
                } else {
                    -((p * xi) as i64)
                }
            }
        };
        Ok(QuadExt { p, kind, d })
    }

    /// K = Q_3(sqrt(-3)) contains the cube roots of unity; its unit groups
    /// follow the anomalous row of the structure table.
    pub fn anomalous(&self) -> bool {
        self.p == 3 && self.kind == ExtKind::RamifiedA
    }

    pub fn ramified(&self) -> bool {
        self.kind.is_ramified()
    }

    /// For ramified K, the unit u0 with -d = p * u0.
    pub fn u0(&self) -> u64 {
        debug_assert!(self.ramified());
        ((-self.d) as u64) / self.p
    }
}

/// One element of the residue ring, as coordinates a + b*w.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingElt {
    pub a: u64,
    pub b: u64,
    pub level: u32,
}

/// The residue ring O_K/p^n (or Z/p^n when ext is None), with its
/// coordinate moduli.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueRing {
    pub p: u64,
    pub n: u32,
    pub ext: Option<QuadExt>,
    pub mod_a: u64,
    pub mod_b: u64,
    d_a: i128,
}

impl ResidueRing {
    pub fn new(p: u64, n: u32, ext: Option<QuadExt>) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        if n == 0 {
            return Err(Error::BadLevel(0));
        }
        if let Some(e) = &ext {
            if e.p != p {
                return Err(Error::Incompatible(format!(
                    "extension is over p = {}, ring over p = {}",
                    e.p, p
                )));
            }
        }
        let (mod_a, mod_b) = match &ext {
            None => (p.pow(n), 1),
            Some(e) if !e.ramified() => (p.pow(n), p.pow(n)),
            Some(_) => (p.pow(n.div_ceil(2)), p.pow(n / 2)),
        };
        let d = ext.map(|e| e.d).unwrap_or(0);
        Ok(ResidueRing {
            p,
            n,
            ext,
            mod_a,
            mod_b,
            d_a: (d as i128).rem_euclid(mod_a as i128),
        })
    }

    pub fn one(&self) -> RingElt {
        self.elt(1, 0)
    }

    pub fn elt(&self, a: u64, b: u64) -> RingElt {
        RingElt {
            a: a % self.mod_a,
            b: b % self.mod_b,
            level: self.n,
        }
    }

    pub fn elt_signed(&self, a: i128, b: i128) -> RingElt {
        RingElt {
            a: a.rem_euclid(self.mod_a as i128) as u64,
            b: b.rem_euclid(self.mod_b as i128) as u64,
            level: self.n,
        }
    }

    /// Order of the unit group: phi(p^n), (p^2-1)p^{2(n-1)}, or (p-1)p^{n-1}.
    pub fn unit_group_order(&self) -> u64 {
        let (p, n) = (self.p, self.n);
        match &self.ext {
            None => (p - 1) * p.pow(n - 1),
            Some(e) if !e.ramified() => (p * p - 1) * p.pow(2 * (n - 1)),
            Some(_) => (p - 1) * p.pow(n - 1),
        }
    }

    pub fn is_unit(&self, x: &RingElt) -> bool {
        match &self.ext {
            Some(e) if !e.ramified() => x.a % self.p != 0 || x.b % self.p != 0,
            _ => x.a % self.p != 0,
        }
    }

    pub fn mul(&self, x: &RingElt, y: &RingElt) -> RingElt {
        let (xa, xb, ya, yb) = (x.a as i128, x.b as i128, y.a as i128, y.b as i128);
        let a = (xa * ya + self.d_a * xb * yb).rem_euclid(self.mod_a as i128) as u64;
        let b = if self.mod_b == 1 {
            0
        } else {
            ((xa * yb + xb * ya) % self.mod_b as i128) as u64
        };
        RingElt {
            a,
            b,
            level: self.n,
        }
    }

    pub fn pow(&self, x: &RingElt, mut e: u64) -> RingElt {
        let mut acc = self.one();
        let mut base = *x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// The Galois conjugate a - b*w.
    pub fn conj_elt(&self, x: &RingElt) -> RingElt {
        RingElt {
            a: x.a,
            b: if self.mod_b == 1 {
                0
            } else {
                (self.mod_b - x.b) % self.mod_b
            },
            level: self.n,
        }
    }

    /// N(x) = x * conj(x) = a^2 - d b^2, a residue mod mod_a.
    pub fn norm_to_base(&self, x: &RingElt) -> u64 {
        let (a, b) = (x.a as i128, x.b as i128);
        (a * a - (self.ext.map(|e| e.d).unwrap_or(0) as i128) * b * b)
            .rem_euclid(self.mod_a as i128) as u64
    }

    pub fn inv(&self, x: &RingElt) -> Result<RingElt> {
        if !self.is_unit(x) {
            return Err(Error::NotAUnit {
                a: x.a,
                b: x.b,
                level: x.level,
            });
        }
        let n = self.norm_to_base(x);
        let ninv = inv_mod(n, self.mod_a).expect("norm of a unit is a unit");
        let c = self.conj_elt(x);
        Ok(RingElt {
            a: (c.a as u128 * ninv as u128 % self.mod_a as u128) as u64,
            b: if self.mod_b == 1 {
                0
            } else {
                (c.b as u128 * (ninv % self.mod_b) as u128 % self.mod_b as u128) as u64
            },
            level: self.n,
        })
    }

    /// 1 + p*w for ramified rings (the pi-direction generator of U^2).
    fn one_plus_p_pi(&self) -> RingElt {
        self.elt(1, self.p % self.mod_b.max(1))
    }

    /// 1 + w^j (w = uniformizer for ramified K; for unramified rings this is
    /// 1 + p^j, with `with_omega` selecting 1 + p^j*w instead).
    fn one_plus_pi_pow(&self, j: u32, with_omega: bool) -> RingElt {
        match &self.ext {
            None => self.elt(1 + self.p.pow(j) % self.mod_a, 0),
            Some(e) if !e.ramified() => {
                let pj = self.p.pow(j) % self.mod_a;
                if with_omega {
                    self.elt(1, pj)
                } else {
                    self.elt(1 + pj, 0)
                }
            }
            Some(e) => {
                // pi^j = d^(j/2) for even j, d^((j-1)/2) * w for odd j
                let k = j / 2;
                let dk = pow_signed(e.d, k, self.mod_a.max(self.mod_b));
                if j % 2 == 0 {
                    self.elt_signed(1 + dk, 0)
                } else {
                    self.elt_signed(1, dk)
                }
            }
        }
    }
}

fn pow_signed(base: i64, e: u32, m: u64) -> i128 {
    let mut acc = 1i128;
    let b = (base as i128).rem_euclid(m as i128);
    for _ in 0..e {
        acc = acc * b % m as i128;
    }
    acc
}

/// Exponent vector: coordinates of a group element (or character) against
/// the cyclic presentation, componentwise reduced.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpVec(pub Vec<i64>);

impl ExpVec {
    pub fn zero(rank: usize) -> Self {
        ExpVec(vec![0; rank])
    }

    pub fn unit(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        ExpVec(v)
    }
}

/// A subgroup of a presented group, itself presented by independent
/// generators in exponent coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    pub orders: Vec<u64>,
    pub gens: Vec<ExpVec>,
}

impl Subgroup {
    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }
}

struct SylowDim {
    pos: usize,
    ord: u64,
    gen: RingElt,
    gen_inv: RingElt,
}

struct SylowCtx {
    cofactor: u64,
    dims: Vec<SylowDim>,
    /// dims[..baby_full] fully enumerated; dims[baby_full] (if any) only up
    /// to exponent baby_part.
    baby_full: usize,
    baby_part: u64,
    table: OnceLock<HashMap<(u64, u64), u32>>,
}

struct GroupInner {
    ring: ResidueRing,
    orders: Vec<u64>,
    gens: Vec<RingElt>,
    order: u64,
    exponent: u64,
    sylow: Vec<OnceLock<SylowCtx>>,
    sylow_primes: Vec<(u64, u32)>,
    filtr: OnceLock<Vec<Subgroup>>,
}

/// A finite abelian unit group with a fixed presentation by independent
/// cyclic generators. Cheap to clone; safe to share across threads.
#[derive(Clone)]
pub struct GroupPresentation(Arc<GroupInner>);

impl std::fmt::Debug for GroupPresentation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupPresentation")
            .field("p", &self.0.ring.p)
            .field("n", &self.0.ring.n)
            .field("ext", &self.0.ring.ext)
            .field("orders", &self.0.orders)
            .finish()
    }
}

/// Construct (O_K/p^n)* (or (Z/p^n)* when ext is None) with generators and
/// orders following the structure table for p odd, verified on the spot.
pub fn unit_group(p: u64, n: u32, ext: Option<QuadExt>) -> Result<GroupPresentation> {
    let ring = ResidueRing::new(p, n, ext)?;
    let mut spec: Vec<(RingElt, u64)> = Vec::new();

    match &ring.ext {
        None => {
            spec.push((teichmueller_rational(&ring), p - 1));
            if n >= 2 {
                spec.push((ring.elt(1 + p, 0), p.pow(n - 1)));
            }
        }
        Some(e) if !e.ramified() => {
            spec.push((teichmueller_quadratic(&ring), p * p - 1));
            if n >= 2 {
                spec.push((ring.elt(1 + p, 0), p.pow(n - 1)));
                spec.push((ring.elt(1, p), p.pow(n - 1)));
            }
        }
        Some(e) => {
            // (a, b) split: a + b = n - 1, a = b for odd n, a = b + 1 for even
            let wa = n / 2;
            let wb = (n - 1) / 2;
            if e.anomalous() && n >= 2 {
                // F_3^* x Z/3 x Z/3^(a-1) x Z/3^b. The principal units split
                // as mu_3 x U^2 here (zeta_3 generates U^1/U^2), and U^2 is
                // generated by 1 + 3 pi and 4; note 1 + pi itself is NOT
                // independent of zeta_3 and 4, since 4 = zeta_3^2 (1 + pi)^2
                // identically in Z_3[zeta_3].
                spec.push((ring.elt(ring.mod_a - 1, 0), 2));
                spec.push((zeta3_coordinates(&ring, e), 3));
                if wa >= 2 {
                    spec.push((ring.one_plus_p_pi(), 3u64.pow(wa - 1)));
                }
                if wb >= 1 {
                    spec.push((ring.elt(4 % ring.mod_a, 0), 3u64.pow(wb)));
                }
            } else {
                spec.push((teichmueller_rational(&ring), p - 1));
                if wa >= 1 {
                    spec.push((ring.one_plus_pi_pow(1, false), p.pow(wa)));
                }
                if wb >= 1 {
                    spec.push((ring.elt(1 + p % ring.mod_a, 0), p.pow(wb)));
                }
            }
        }
    }

    let orders: Vec<u64> = spec.iter().map(|&(_, m)| m).collect();
    let gens: Vec<RingElt> = spec.iter().map(|&(g, _)| g).collect();

    for (g, m) in &spec {
        assert!(ring.is_unit(g), "generator must be a unit");
        assert!(
            elt_has_exact_order(&ring, g, *m),
            "generator {:?} does not have order {} in (p={}, n={}, ext={:?})",
            g,
            m,
            p,
            n,
            ring.ext
        );
    }
    let order: u64 = orders.iter().product();
    assert_eq!(
        order,
        ring.unit_group_order(),
        "presentation must cover the full unit group"
    );

    let exponent = orders.iter().fold(1u64, |acc, &m| lcm(acc, m));
    let sylow_primes = factorize(order);
    let inner = GroupInner {
        ring,
        orders,
        gens,
        order,
        exponent,
        sylow: sylow_primes.iter().map(|_| OnceLock::new()).collect(),
        sylow_primes,
        filtr: OnceLock::new(),
    };
    let g = GroupPresentation(Arc::new(inner));
    g.self_check()?;
    Ok(g)
}

fn elt_has_exact_order(ring: &ResidueRing, x: &RingElt, m: u64) -> bool {
    if ring.pow(x, m) != ring.one() {
        return false;
    }
    factorize(m)
        .iter()
        .all(|&(q, _)| ring.pow(x, m / q) != ring.one())
}

/// Teichmueller lift of the smallest primitive root mod p, projected to the
/// torsion component: the unique lift of exact order p - 1.
fn teichmueller_rational(ring: &ResidueRing) -> RingElt {
    let p = ring.p;
    let g = (2..p)
        .find(|&a| exact_order(a, p, p - 1) == Some(p - 1))
        .expect("primitive root exists");
    teichmueller_project(ring, &ring.elt(g, 0), p - 1)
}

/// Teichmueller lift for the unramified quadratic ring: the lift of the
/// lexicographically smallest generator of F_{p^2}^*.
fn teichmueller_quadratic(ring: &ResidueRing) -> RingElt {
    let p = ring.p;
    let q_ord = p * p - 1;
    // search the residue field: order of a + b*w mod p
    let residue_ring = ResidueRing::new(p, 1, ring.ext).expect("level-1 ring");
    let mut found = None;
    'outer: for a in 0..p {
        for b in 0..p {
            let x = residue_ring.elt(a, b);
            if !residue_ring.is_unit(&x) {
                continue;
            }
            if elt_has_exact_order(&residue_ring, &x, q_ord) {
                found = Some((a, b));
                break 'outer;
            }
        }
    }
    let (a, b) = found.expect("F_{p^2}^* is cyclic");
    teichmueller_project(ring, &ring.elt(a, b), q_ord)
}

/// Project a unit whose residue has order dividing t onto the torsion
/// component: raise to M with M = 0 mod the wild p-part, M = 1 mod t.
fn teichmueller_project(ring: &ResidueRing, x: &RingElt, t: u64) -> RingElt {
    let p_pow = {
        let mut w = 1u64;
        let mut o = ring.unit_group_order();
        while o % ring.p == 0 {
            w *= ring.p;
            o /= ring.p;
        }
        w
    };
    let m = p_pow as u128 * inv_mod(p_pow % t, t).expect("p coprime to torsion order") as u128;
    let mut e = m;
    let mut acc = ring.one();
    let mut base = *x;
    while e > 0 {
        if e & 1 == 1 {
            acc = ring.mul(&acc, &base);
        }
        base = ring.mul(&base, &base);
        e >>= 1;
    }
    acc
}

/// zeta_3 = (-1 + sqrt(-3)) / 2 in coordinates over w = sqrt(d), d = -3 r^2.
fn zeta3_coordinates(ring: &ResidueRing, ext: &QuadExt) -> RingElt {
    let r = (((-ext.d) / 3) as f64).sqrt().round() as u64;
    debug_assert_eq!(-(ext.d), (3 * r * r) as i64);
    let inv2a = inv_mod(2, ring.mod_a).expect("2 invertible");
    let inv2rb = inv_mod(2 * r % ring.mod_b.max(1), ring.mod_b).unwrap_or(0);
    ring.elt_signed(-(inv2a as i128), inv2rb as i128)
}

impl GroupPresentation {
    pub fn ring(&self) -> &ResidueRing {
        &self.0.ring
    }

    pub fn p(&self) -> u64 {
        self.0.ring.p
    }

    pub fn level(&self) -> u32 {
        self.0.ring.n
    }

    pub fn ext(&self) -> Option<&QuadExt> {
        self.0.ring.ext.as_ref()
    }

    pub fn orders(&self) -> &[u64] {
        &self.0.orders
    }

    pub fn gens(&self) -> &[RingElt] {
        &self.0.gens
    }

    pub fn rank(&self) -> usize {
        self.0.orders.len()
    }

    pub fn order(&self) -> u64 {
        self.0.order
    }

    pub fn exponent(&self) -> u64 {
        self.0.exponent
    }

    pub fn same_group(&self, other: &GroupPresentation) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.ring == other.0.ring && self.0.orders == other.0.orders)
    }

    pub fn one(&self) -> RingElt {
        self.0.ring.one()
    }

    /// prod gens[i]^{e[i]}.
    pub fn exp(&self, e: &ExpVec) -> RingElt {
        let ring = &self.0.ring;
        let mut acc = ring.one();
        for (i, &ei) in e.0.iter().enumerate() {
            let m = self.0.orders[i];
            let r = ei.rem_euclid(m as i64) as u64;
            if r != 0 {
                acc = ring.mul(&acc, &ring.pow(&self.0.gens[i], r));
            }
        }
        acc
    }

    pub fn reduce(&self, e: &mut ExpVec) {
        for (x, &m) in e.0.iter_mut().zip(&self.0.orders) {
            *x = x.rem_euclid(m as i64);
        }
    }

    /// Discrete logarithm against the presentation.
    pub fn dlog(&self, x: &RingElt) -> Result<ExpVec> {
        let ring = &self.0.ring;
        if x.level != ring.n {
            return Err(Error::LevelMismatch {
                elt_level: x.level,
                group_level: ring.n,
            });
        }
        if !ring.is_unit(x) {
            return Err(Error::NotAUnit {
                a: x.a,
                b: x.b,
                level: x.level,
            });
        }
        let r = self.rank();
        let mut residues: Vec<Vec<(u64, u64)>> = vec![Vec::new(); r]; // (residue, modulus)
        for (qi, &(_q, _vq)) in self.0.sylow_primes.iter().enumerate() {
            let ctx = self.sylow_ctx(qi);
            let cof = ctx.cofactor;
            let xq = ring.pow(x, cof);
            let sol = self
                .sylow_dlog(ctx, &xq)
                .ok_or_else(|| Error::Incompatible("element outside the presented group".into()))?;
            for (dim, &e) in ctx.dims.iter().zip(&sol) {
                residues[dim.pos].push((e, dim.ord));
            }
        }
        let mut out = Vec::with_capacity(r);
        for (i, rs) in residues.iter().enumerate() {
            let mut acc = 0u64;
            let mut m = 1u64;
            for &(res, md) in rs {
                acc = arith::crt2(acc, m, res, md);
                m *= md;
            }
            debug_assert_eq!(m, self.0.orders[i]);
            out.push(acc as i64);
        }
        let ev = ExpVec(out);
        debug_assert_eq!(self.exp(&ev), *x, "dlog round trip");
        Ok(ev)
    }

    fn sylow_ctx(&self, qi: usize) -> &SylowCtx {
        self.0.sylow[qi].get_or_init(|| {
            let (q, vq) = self.0.sylow_primes[qi];
            let cofactor = self.0.order / q.pow(vq);
            let ring = &self.0.ring;
            let mut dims: Vec<SylowDim> = Vec::new();
            for (pos, (&m, g)) in self.0.orders.iter().zip(&self.0.gens).enumerate() {
                let e = valuation(m, q);
                if e == 0 {
                    continue;
                }
                let h = ring.pow(g, cofactor);
                let ord = q.pow(e);
                let h_inv = ring.inv(&h).expect("unit");
                dims.push(SylowDim {
                    pos,
                    ord,
                    gen: h,
                    gen_inv: h_inv,
                });
            }
            dims.sort_by(|a, b| b.ord.cmp(&a.ord));
            let total: u64 = dims.iter().map(|d| d.ord).product();
            let target = (total as f64).sqrt().ceil() as u64;
            let mut baby = 1u64;
            let mut baby_full = 0usize;
            let mut baby_part = 1u64;
            for (i, d) in dims.iter().enumerate() {
                if baby >= target {
                    break;
                }
                if baby * d.ord <= target {
                    baby *= d.ord;
                    baby_full = i + 1;
                } else {
                    baby_part = target.div_ceil(baby).min(d.ord);
                    baby_full = i;
                    break;
                }
            }
            if baby_full == dims.len() {
                baby_part = 1;
            }
            SylowCtx {
                cofactor,
                dims,
                baby_full,
                baby_part,
                table: OnceLock::new(),
            }
        })
    }

    fn sylow_baby_table<'a>(&self, ctx: &'a SylowCtx) -> &'a HashMap<(u64, u64), u32> {
        ctx.table.get_or_init(|| {
            let ring = &self.0.ring;
            let mut caps: Vec<u64> = ctx.dims[..ctx.baby_full].iter().map(|d| d.ord).collect();
            if ctx.baby_part > 1 {
                caps.push(ctx.baby_part);
            }
            let size: u64 = caps.iter().product();
            let mut table = HashMap::with_capacity(size as usize);
            let mut idx = vec![0u64; caps.len()];
            let mut cur = ring.one();
            let mut count = 0u32;
            loop {
                table.insert((cur.a, cur.b), count);
                count += 1;
                // odometer increment with incremental multiplication
                let mut k = 0;
                loop {
                    if k == caps.len() {
                        return table;
                    }
                    idx[k] += 1;
                    if idx[k] < caps[k] {
                        cur = ring.mul(&cur, &ctx.dims[k].gen);
                        break;
                    }
                    // wrap: exponent (caps[k]-1) -> 0 means multiplying by
                    // gen^{ord - caps[k] + 1}
                    let back = ctx.dims[k].ord - (caps[k] - 1);
                    cur = ring.mul(&cur, &ring.pow(&ctx.dims[k].gen, back % ctx.dims[k].ord));
                    idx[k] = 0;
                    k += 1;
                }
            }
        })
    }

    /// Solve x = prod h_i^{e_i} inside one q-Sylow context.
    fn sylow_dlog(&self, ctx: &SylowCtx, x: &RingElt) -> Option<Vec<u64>> {
        let ring = &self.0.ring;
        if ctx.dims.is_empty() {
            return if *x == ring.one() {
                Some(vec![])
            } else {
                None
            };
        }
        let table = self.sylow_baby_table(ctx);
        let baby_caps: Vec<u64> = {
            let mut c: Vec<u64> = ctx.dims[..ctx.baby_full].iter().map(|d| d.ord).collect();
            if ctx.baby_part > 1 {
                c.push(ctx.baby_part);
            }
            c
        };
        // giant dims: the partial dim (stride baby_part) then the untouched dims
        struct GiantDim {
            dim: usize,
            count: u64,
            stride: u64,
            step_inv: RingElt,
            wrap: RingElt,
        }
        let mut giants: Vec<GiantDim> = Vec::new();
        if ctx.baby_part > 1 {
            let d = &ctx.dims[ctx.baby_full];
            let count = d.ord.div_ceil(ctx.baby_part);
            let step_inv = ring.pow(&d.gen_inv, ctx.baby_part);
            let wrap = ring.pow(&d.gen, (count - 1) * ctx.baby_part % d.ord);
            giants.push(GiantDim {
                dim: ctx.baby_full,
                count,
                stride: ctx.baby_part,
                step_inv,
                wrap,
            });
        }
        let first_untouched = ctx.baby_full + if ctx.baby_part > 1 { 1 } else { 0 };
        for (i, d) in ctx.dims.iter().enumerate().skip(first_untouched) {
            giants.push(GiantDim {
                dim: i,
                count: d.ord,
                stride: 1,
                step_inv: d.gen_inv,
                wrap: ring.pow(&d.gen, (d.ord - 1) % d.ord),
            });
        }

        let mut gidx = vec![0u64; giants.len()];
        let mut cur = *x;
        loop {
            if let Some(&bi) = table.get(&(cur.a, cur.b)) {
                // decode baby index -> exponents
                let mut rem = bi as u64;
                let mut exps = vec![0u64; ctx.dims.len()];
                for (k, &cap) in baby_caps.iter().enumerate() {
                    let e = rem % cap;
                    rem /= cap;
                    if k < ctx.baby_full {
                        exps[k] = e;
                    } else {
                        exps[ctx.baby_full] = e;
                    }
                }
                for (g, &t) in giants.iter().zip(&gidx) {
                    exps[g.dim] = (exps[g.dim] + t * g.stride) % ctx.dims[g.dim].ord;
                }
                // verify (cheap): recombine
                return Some(exps);
            }
            // odometer over giants
            let mut k = 0;
            loop {
                if k == giants.len() {
                    return None;
                }
                gidx[k] += 1;
                if gidx[k] < giants[k].count {
                    cur = ring.mul(&cur, &giants[k].step_inv);
                    break;
                }
                cur = ring.mul(&cur, &giants[k].wrap);
                gidx[k] = 0;
                k += 1;
            }
        }
    }

    /// Construction-time sanity: generator dlogs and round trips on a
    /// deterministic sample of units.
    fn self_check(&self) -> Result<()> {
        for (i, g) in self.0.gens.iter().enumerate() {
            let e = self.dlog(g)?;
            let expected = ExpVec::unit(self.rank(), i);
            if e != expected {
                return Err(Error::Incompatible(format!(
                    "generator {i} has dlog {e:?}, presentation is not independent"
                )));
            }
        }
        for x in self.sample_units(8, 0x5eed ^ self.0.order) {
            let e = self.dlog(&x)?;
            if self.exp(&e) != x {
                return Err(Error::Incompatible(
                    "dlog round trip failed; generators do not span".into(),
                ));
            }
        }
        Ok(())
    }

    /// Deterministic pseudo-random units (for tests and self checks).
    pub fn sample_units(&self, count: usize, seed: u64) -> Vec<RingElt> {
        let ring = &self.0.ring;
        let mut rng = Lcg::new(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let x = ring.elt(rng.below(ring.mod_a), rng.below(ring.mod_b));
            if ring.is_unit(&x) {
                out.push(x);
            }
        }
        out
    }

    /// Visit every element of the group as (exponent vector, ring element),
    /// in odometer order over the presentation.
    pub fn for_each_element<F: FnMut(&[i64], &RingElt)>(&self, mut f: F) {
        let ring = &self.0.ring;
        let r = self.rank();
        let mut idx = vec![0i64; r];
        let mut cur = ring.one();
        loop {
            f(&idx, &cur);
            let mut k = 0;
            loop {
                if k == r {
                    return;
                }
                idx[k] += 1;
                if (idx[k] as u64) < self.0.orders[k] {
                    cur = ring.mul(&cur, &self.0.gens[k]);
                    break;
                }
                cur = ring.mul(&cur, &self.0.gens[k]); // wraps: gen^ord = 1
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Image of U^j = 1 + p^j in the group, presented by independent
    /// generators. j = 0 is the whole group; j = n is trivial.
    pub fn filtration(&self, j: u32) -> Result<Subgroup> {
        let n = self.0.ring.n;
        if j > n {
            return Err(Error::FiltrationRange { j, n });
        }
        let all = self.0.filtr.get_or_init(|| {
            (0..=n)
                .map(|jj| self.filtration_uncached(jj))
                .collect::<Vec<_>>()
        });
        Ok(all[j as usize].clone())
    }

    fn filtration_uncached(&self, j: u32) -> Subgroup {
        let n = self.0.ring.n;
        if j == 0 {
            return Subgroup {
                orders: self.0.orders.clone(),
                gens: (0..self.rank()).map(|i| ExpVec::unit(self.rank(), i)).collect(),
            };
        }
        if j == n {
            return Subgroup {
                orders: vec![],
                gens: vec![],
            };
        }
        let ring = &self.0.ring;
        let mut raw: Vec<Vec<i64>> = Vec::new();
        for jj in j..n {
            let mut elts = vec![ring.one_plus_pi_pow(jj, false)];
            if matches!(&ring.ext, Some(e) if !e.ramified()) {
                elts.push(ring.one_plus_pi_pow(jj, true));
            }
            for e in elts {
                let dl = self.dlog(&e).expect("principal units are units");
                raw.push(dl.0);
            }
        }
        let sub = subgroup_from_gens(&raw, &self.0.orders);
        Subgroup {
            orders: sub.orders,
            gens: sub.gens.into_iter().map(ExpVec).collect(),
        }
    }
}

/// Tags for the structure-preserving maps between unit groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum MapTag {
    Embed,
    Norm,
    Conj,
}

/// A homomorphism between presented groups stored as an integer matrix on
/// exponent vectors: dst_exp = mat * src_exp.
#[derive(Debug, Clone)]
pub struct HomMatrix {
    pub tag: MapTag,
    pub src_orders: Vec<u64>,
    pub dst_orders: Vec<u64>,
    /// mat[i][j]: coefficient of source generator j in destination coord i.
    pub mat: Vec<Vec<i64>>,
}

impl HomMatrix {
    fn from_images(tag: MapTag, src: &GroupPresentation, dst: &GroupPresentation, images: Vec<ExpVec>) -> Self {
        let mut mat = vec![vec![0i64; src.rank()]; dst.rank()];
        for (j, img) in images.iter().enumerate() {
            for i in 0..dst.rank() {
                mat[i][j] = img.0[i];
            }
        }
        let h = HomMatrix {
            tag,
            src_orders: src.orders().to_vec(),
            dst_orders: dst.orders().to_vec(),
            mat,
        };
        h.assert_well_defined();
        h
    }

    /// Columns must respect the order relations: m_j * col_j = 0 in the target.
    fn assert_well_defined(&self) {
        for (j, &mj) in self.src_orders.iter().enumerate() {
            for (i, &mi) in self.dst_orders.iter().enumerate() {
                assert_eq!(
                    (self.mat[i][j] as i128 * mj as i128).rem_euclid(mi as i128),
                    0,
                    "column {j} violates order relations"
                );
            }
        }
    }

    pub fn apply(&self, x: &ExpVec) -> ExpVec {
        assert_eq!(x.0.len(), self.src_orders.len());
        let out = self
            .mat
            .iter()
            .zip(&self.dst_orders)
            .map(|(row, &m)| {
                let s: i128 = row.iter().zip(&x.0).map(|(&c, &v)| c as i128 * v as i128).sum();
                s.rem_euclid(m as i128) as i64
            })
            .collect();
        ExpVec(out)
    }

    /// Matrix of self after other (self ∘ other), reduced mod target orders.
    pub fn compose(&self, other: &HomMatrix) -> HomMatrix {
        assert_eq!(self.src_orders, other.dst_orders);
        let rows = self.dst_orders.len();
        let cols = other.src_orders.len();
        let mid = self.src_orders.len();
        let mut mat = vec![vec![0i64; cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                let mut acc = 0i128;
                for k in 0..mid {
                    acc += self.mat[i][k] as i128 * other.mat[k][j] as i128;
                }
                mat[i][j] = acc.rem_euclid(self.dst_orders[i] as i128) as i64;
            }
        }
        HomMatrix {
            tag: self.tag,
            src_orders: other.src_orders.clone(),
            dst_orders: self.dst_orders.clone(),
            mat,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.src_orders == self.dst_orders
            && self.mat.iter().enumerate().all(|(i, row)| {
                row.iter().enumerate().all(|(j, &c)| {
                    (c - i64::from(i == j)).rem_euclid(self.dst_orders[i] as i64) == 0
                })
            })
    }

    /// Kernel of the map, as a subgroup of the source.
    pub fn kernel(&self) -> Subgroup {
        let mat: linalg::Mat = self
            .mat
            .iter()
            .map(|row| row.iter().map(|&c| c as i128).collect())
            .collect();
        let k = linalg::kernel_mod(&mat, &self.dst_orders, &self.src_orders);
        Subgroup {
            orders: k.orders,
            gens: k.gens.into_iter().map(ExpVec).collect(),
        }
    }

    /// Order of the image subgroup (|src| / |kernel|).
    pub fn image_order(&self) -> u64 {
        let src: u64 = self.src_orders.iter().product();
        src / self.kernel().order()
    }
}

/// The three structure maps tying (O_K/p^n)* to the rational units.
pub struct StructureMaps {
    pub embed: HomMatrix,
    pub norm: HomMatrix,
    pub conj: HomMatrix,
}

/// Level of the rational unit group probed by a level-n extension group:
/// p^n ∩ Z_p = p^ceil(n/2) for ramified K, p^n for unramified K.
pub fn base_level_for(ext: &QuadExt, n: u32) -> u32 {
    if ext.ramified() {
        n.div_ceil(2)
    } else {
        n
    }
}

/// Compute embed: G_Qp -> G_K, norm: G_K -> G_Qp and conj: G_K -> G_K by
/// applying each set map to the generators and taking discrete logs.
pub fn structure_maps(gk: &GroupPresentation, gq: &GroupPresentation) -> Result<StructureMaps> {
    let ext = gk
        .ext()
        .ok_or_else(|| Error::Incompatible("first group must be an extension group".into()))?;
    if gq.ext().is_some() {
        return Err(Error::Incompatible("second group must be rational".into()));
    }
    if gk.p() != gq.p() {
        return Err(Error::Incompatible("groups over different primes".into()));
    }
    let want = base_level_for(ext, gk.level());
    if gq.level() != want {
        return Err(Error::Incompatible(format!(
            "rational group has level {}, expected {}",
            gq.level(),
            want
        )));
    }

    let kring = gk.ring();
    let embed_images = gq
        .gens()
        .iter()
        .map(|g| gk.dlog(&kring.elt(g.a, 0)))
        .collect::<Result<Vec<_>>>()?;
    let norm_images = gk
        .gens()
        .iter()
        .map(|g| gq.dlog(&gq.ring().elt(kring.norm_to_base(g), 0)))
        .collect::<Result<Vec<_>>>()?;
    let conj_images = gk
        .gens()
        .iter()
        .map(|g| gk.dlog(&kring.conj_elt(g)))
        .collect::<Result<Vec<_>>>()?;

    Ok(StructureMaps {
        embed: HomMatrix::from_images(MapTag::Embed, gq, gk, embed_images),
        norm: HomMatrix::from_images(MapTag::Norm, gk, gq, norm_images),
        conj: HomMatrix::from_images(MapTag::Conj, gk, gk, conj_images),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_orders() {
        let g = unit_group(5, 3, Some(QuadExt::new(5, ExtKind::Unramified).unwrap())).unwrap();
        assert_eq!(g.orders(), &[24, 25, 25]);

        let g = unit_group(5, 1, None).unwrap();
        assert_eq!(g.orders(), &[4]);

        let g = unit_group(3, 4, Some(QuadExt::new(3, ExtKind::RamifiedA).unwrap())).unwrap();
        assert_eq!(g.orders(), &[2, 3, 3, 3]);

        // anomalous n = 1 degenerates to F_3^*
        let g = unit_group(3, 1, Some(QuadExt::new(3, ExtKind::RamifiedA).unwrap())).unwrap();
        assert_eq!(g.orders(), &[2]);

        // non-anomalous ramified, odd and even levels
        let g = unit_group(7, 3, Some(QuadExt::new(7, ExtKind::RamifiedB).unwrap())).unwrap();
        assert_eq!(g.orders(), &[6, 7, 7]);
        let g = unit_group(7, 2, Some(QuadExt::new(7, ExtKind::RamifiedA).unwrap())).unwrap();
        assert_eq!(g.orders(), &[6, 7]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(unit_group(2, 1, None), Err(Error::NotOddPrime(2))));
        assert!(matches!(unit_group(9, 1, None), Err(Error::NotOddPrime(9))));
        assert!(matches!(unit_group(5, 0, None), Err(Error::BadLevel(0))));
    }

    #[test]
    fn dlog_round_trips() {
        for (p, n, kind) in [
            (3, 4, None),
            (5, 3, Some(ExtKind::Unramified)),
            (3, 5, Some(ExtKind::RamifiedA)),
            (3, 6, Some(ExtKind::RamifiedB)),
            (7, 4, Some(ExtKind::RamifiedA)),
            (13, 2, Some(ExtKind::Unramified)),
        ] {
            let ext = kind.map(|k| QuadExt::new(p, k).unwrap());
            let g = unit_group(p, n, ext).unwrap();
            assert_eq!(g.order(), g.ring().unit_group_order());
            for x in g.sample_units(25, 42) {
                let e = g.dlog(&x).unwrap();
                assert_eq!(g.exp(&e), x, "round trip at p={p} n={n} {kind:?}");
            }
            // identity and generators
            assert_eq!(g.dlog(&g.one()).unwrap(), ExpVec::zero(g.rank()));
        }
    }

    #[test]
    fn dlog_rejects_non_units_and_wrong_level() {
        let g = unit_group(5, 2, None).unwrap();
        assert!(matches!(
            g.dlog(&g.ring().elt(5, 0)),
            Err(Error::NotAUnit { .. })
        ));
        let other = unit_group(5, 3, None).unwrap();
        assert!(matches!(
            g.dlog(&other.one()),
            Err(Error::LevelMismatch { .. })
        ));
    }

    #[test]
    fn structure_map_laws() {
        for kind in [ExtKind::Unramified, ExtKind::RamifiedA, ExtKind::RamifiedB] {
            for (p, n) in [(3u64, 3u32), (5, 2), (7, 4)] {
                let ext = QuadExt::new(p, kind).unwrap();
                let gk = unit_group(p, n, Some(ext)).unwrap();
                let gq = unit_group(p, base_level_for(&ext, n), None).unwrap();
                let maps = structure_maps(&gk, &gq).unwrap();

                // conj is an involution
                assert!(maps.conj.compose(&maps.conj).is_identity());

                // norm(embed(u)) = u^2 for ramified K, u * u = u^{1+p}-free check:
                // for unramified K the norm of a rational unit is u^2 as well
                let two = maps.norm.compose(&maps.embed);
                for i in 0..gq.rank() {
                    let e = ExpVec::unit(gq.rank(), i);
                    let img = two.apply(&e);
                    let mut expect = ExpVec::zero(gq.rank());
                    expect.0[i] = 2 % gq.orders()[i] as i64;
                    // compare modulo orders
                    let diff_ok = img
                        .0
                        .iter()
                        .zip(&expect.0)
                        .zip(gq.orders())
                        .all(|((&a, &b), &m)| (a - b).rem_euclid(m as i64) == 0);
                    assert!(diff_ok, "norm∘embed must square rational units");
                }

                // homomorphism spot check on random elements
                let xs = gk.sample_units(5, 7);
                let ys = gk.sample_units(5, 11);
                for (x, y) in xs.iter().zip(&ys) {
                    let ex = gk.dlog(x).unwrap();
                    let ey = gk.dlog(y).unwrap();
                    let exy = gk.dlog(&gk.ring().mul(x, y)).unwrap();
                    let lhs = maps.norm.apply(&exy);
                    let sum = ExpVec(
                        ex.0.iter()
                            .zip(&ey.0)
                            .map(|(&a, &b)| a + b)
                            .collect(),
                    );
                    let rhs = maps.norm.apply(&sum);
                    let same = lhs
                        .0
                        .iter()
                        .zip(&rhs.0)
                        .zip(gq.orders())
                        .all(|((&a, &b), &m)| (a - b).rem_euclid(m as i64) == 0);
                    assert!(same, "norm must be a homomorphism");
                }
            }
        }
    }

    #[test]
    fn norm_kernel_unramified_level_one() {
        // unramified K, n = 1: norm onto (Z/p)^* is surjective with kernel
        // of order p + 1
        for p in [3u64, 5, 7, 11, 13] {
            let ext = QuadExt::new(p, ExtKind::Unramified).unwrap();
            let gk = unit_group(p, 1, Some(ext)).unwrap();
            let gq = unit_group(p, 1, None).unwrap();
            let maps = structure_maps(&gk, &gq).unwrap();
            assert_eq!(maps.norm.kernel().order(), p + 1);
            assert_eq!(maps.norm.image_order(), p - 1);
        }
    }

    #[test]
    fn filtration_structure() {
        // j = n is trivial
        let g = unit_group(5, 2, None).unwrap();
        assert_eq!(g.filtration(2).unwrap().order(), 1);
        // (Z/p^2)^*, j = 1: order p, generated by 1 + p
        let f = g.filtration(1).unwrap();
        assert_eq!(f.order(), 5);
        assert_eq!(g.exp(&f.gens[0]), g.ring().elt(6, 0));
        // out of range
        assert!(matches!(
            g.filtration(3),
            Err(Error::FiltrationRange { .. })
        ));

        // unramified K, p = 3, n = 2, j = 1: order 9
        let ext = QuadExt::new(3, ExtKind::Unramified).unwrap();
        let gk = unit_group(3, 2, Some(ext)).unwrap();
        assert_eq!(gk.filtration(1).unwrap().order(), 9);
        assert_eq!(gk.filtration(0).unwrap().order(), gk.order());

        // successive quotients have size q_K (p^2 unramified, p otherwise)
        for (p, n, kind) in [
            (3u64, 4u32, Some(ExtKind::Unramified)),
            (5, 4, Some(ExtKind::RamifiedA)),
            (3, 5, Some(ExtKind::RamifiedA)),
            (7, 3, None),
        ] {
            let ext = kind.map(|k| QuadExt::new(p, k).unwrap());
            let qk = match kind {
                Some(ExtKind::Unramified) => p * p,
                _ => p,
            };
            let g = unit_group(p, n, ext).unwrap();
            for j in 1..n {
                let a = g.filtration(j).unwrap().order();
                let b = g.filtration(j + 1).unwrap().order();
                assert_eq!(a / b, qk, "filtration step at p={p} n={n} j={j} {kind:?}");
                assert_eq!(a % b, 0);
            }
        }
    }

    #[test]
    fn alternate_representative_same_structure() {
        for kind in ExtKind::ALL {
            let g1 = unit_group(5, 3, Some(QuadExt::new(5, kind).unwrap())).unwrap();
            let g2 = unit_group(5, 3, Some(QuadExt::alternate(5, kind).unwrap())).unwrap();
            assert_eq!(g1.orders(), g2.orders());
        }
    }
}
